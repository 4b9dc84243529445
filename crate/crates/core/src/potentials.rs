//! Potential field mathematics shared by every planner.
//!
//! All potentials are exponentials of squared distances:
//!
//! * attraction toward the target: `J_t(r) = −α_t · exp(−μ_t ‖r − r_t‖²)`
//! * repulsion from one obstacle:  `J_o(r) = α_o · exp(−μ_o ‖r − r_o‖²)`
//!
//! Values are plain `f64`. With the default gains the attractive term is
//! subnormal near the far corner of a 30 m map and flushes to zero beyond
//! roughly 27.4 m; nothing here rescales to avoid that. The branching
//! repulsion returns `f64::INFINITY` inside the lower radius, and any sum
//! containing it is `+∞`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{squared_distance, Point2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{key} must be positive and finite, got {value}")]
    NotPositive { key: &'static str, value: f64 },
    #[error("rho_l ({rho_l}) must be smaller than rho_u ({rho_u})")]
    RadiiOrder { rho_l: f64, rho_u: f64 },
    #[error("mu bounds must satisfy mu_min <= mu_o <= mu_max, got {mu_min} <= {mu_o} <= {mu_max}")]
    MuBounds { mu_min: f64, mu_o: f64, mu_max: f64 },
}

impl ParamError {
    /// The configuration key the error is about.
    pub fn key(&self) -> &'static str {
        match self {
            ParamError::NotPositive { key, .. } => key,
            ParamError::RadiiOrder { .. } => "rho_l",
            ParamError::MuBounds { .. } => "mu_o",
        }
    }
}

/// Gains, decay rates and radii of the potential field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub alpha_t: f64,
    pub mu_t: f64,
    pub alpha_o: f64,
    pub mu_o: f64,
    /// Hard safety radius around each obstacle (m).
    pub rho_l: f64,
    /// Influence cutoff of the branching repulsion (m).
    pub rho_u: f64,
    pub mu_min: f64,
    pub mu_max: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            alpha_t: 1e4,
            mu_t: 1.0,
            alpha_o: 1.0,
            mu_o: 1000.0,
            rho_l: 0.4,
            rho_u: 4.5,
            mu_min: 1.0,
            mu_max: 1000.0,
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("alpha_t", self.alpha_t),
            ("mu_t", self.mu_t),
            ("alpha_o", self.alpha_o),
            ("mu_o", self.mu_o),
            ("rho_l", self.rho_l),
            ("rho_u", self.rho_u),
            ("mu_min", self.mu_min),
            ("mu_max", self.mu_max),
        ];
        for (key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParamError::NotPositive { key, value });
            }
        }
        if self.rho_l >= self.rho_u {
            return Err(ParamError::RadiiOrder {
                rho_l: self.rho_l,
                rho_u: self.rho_u,
            });
        }
        if !(self.mu_min <= self.mu_o && self.mu_o <= self.mu_max) {
            return Err(ParamError::MuBounds {
                mu_min: self.mu_min,
                mu_o: self.mu_o,
                mu_max: self.mu_max,
            });
        }
        Ok(())
    }
}

#[inline]
pub fn target_potential(r: Point2, target: Point2, params: &PotentialParams) -> f64 {
    -params.alpha_t * (-params.mu_t * squared_distance(r, target)).exp()
}

#[inline]
pub fn obstacle_potential(r: Point2, obstacle: Point2, alpha_o: f64, mu_o: f64) -> f64 {
    alpha_o * (-mu_o * squared_distance(r, obstacle)).exp()
}

/// Sum of [`obstacle_potential`] over the detected obstacles.
pub fn total_repulsive(r: Point2, detected: &[Point2], alpha_o: f64, mu_o: f64) -> f64 {
    detected.iter().map(|&o| obstacle_potential(r, o, alpha_o, mu_o)).sum()
}

/// `J_a(r) = J_t(r) + J_o(r)`. Evaluated at a bacteria point this is that
/// point's total potential.
pub fn agent_total_potential(r: Point2, target: Point2, detected: &[Point2], params: &PotentialParams) -> f64 {
    target_potential(r, target, params) + total_repulsive(r, detected, params.alpha_o, params.mu_o)
}

/// Which piece of the branching repulsion applies at a given distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `d < ρ_l`: the point is unselectable.
    Inner,
    /// `ρ_l ≤ d ≤ ρ_u`: ordinary exponential repulsion.
    Annulus,
    /// `d > ρ_u`: no influence.
    Outer,
}

pub fn classify_branch(distance: f64, params: &PotentialParams) -> Branch {
    if distance < params.rho_l {
        Branch::Inner
    } else if distance <= params.rho_u {
        Branch::Annulus
    } else {
        Branch::Outer
    }
}

/// Piecewise repulsion with a hard inner disk and an influence cutoff.
pub fn branching_obstacle_potential(r: Point2, obstacle: Point2, params: &PotentialParams) -> f64 {
    let rho = squared_distance(r, obstacle);
    match classify_branch(rho.sqrt(), params) {
        Branch::Inner => f64::INFINITY,
        Branch::Annulus => params.alpha_o * (-params.mu_o * rho).exp(),
        Branch::Outer => 0.0,
    }
}

/// Sum of the branching repulsion; `+∞` as soon as any term is.
pub fn branching_total_repulsive(r: Point2, detected: &[Point2], params: &PotentialParams) -> f64 {
    let mut sum = 0.0;
    for &o in detected {
        let term = branching_obstacle_potential(r, o, params);
        if term == f64::INFINITY {
            return f64::INFINITY;
        }
        sum += term;
    }
    sum
}

/// Attraction plus branching repulsion.
pub fn branching_total_potential(r: Point2, target: Point2, detected: &[Point2], params: &PotentialParams) -> f64 {
    let repulsive = branching_total_repulsive(r, detected, params);
    if repulsive == f64::INFINITY {
        return f64::INFINITY;
    }
    target_potential(r, target, params) + repulsive
}

/// `J_candidate − J_agent < 0`.
///
/// An infinite candidate never passes. An infinite agent potential (the
/// agent already sits inside some lower radius) is passed by every finite
/// candidate.
#[inline]
pub fn movement_criterion(j_candidate: f64, j_agent: f64) -> bool {
    if j_candidate == f64::INFINITY {
        return false;
    }
    if j_agent == f64::INFINITY {
        return true;
    }
    j_candidate - j_agent < 0.0
}

/// Movement criterion with the far-field tie-break: if both potentials are
/// finite and compare equal (typically because both flushed to zero far
/// from the target), a candidate strictly closer to the target passes.
#[inline]
pub(crate) fn accepts_move(j_candidate: f64, j_agent: f64, closer_to_target: bool) -> bool {
    movement_criterion(j_candidate, j_agent) || (closer_to_target && j_candidate.is_finite() && j_candidate == j_agent)
}

/// Bacteria-point potential with a per-point repulsion decay `mu`.
pub fn modified_total_potential(
    bacteria_pt: Point2,
    target: Point2,
    detected: &[Point2],
    params: &PotentialParams,
    mu: f64,
) -> f64 {
    target_potential(bacteria_pt, target, params) + total_repulsive(bacteria_pt, detected, params.alpha_o, mu)
}

/// Indices of the points keeping at least `rho_l` from every detected obstacle.
pub fn random_walk_candidates(points: &[Point2], detected: &[Point2], rho_l: f64) -> Vec<usize> {
    let rho_l_sq = rho_l * rho_l;
    points
        .iter()
        .enumerate()
        .filter(|(_, &p)| detected.iter().all(|&o| squared_distance(p, o) >= rho_l_sq))
        .map(|(k, _)| k)
        .collect()
}
