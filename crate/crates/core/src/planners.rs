//! Per-step decision procedures.
//!
//! The bacteria-point planners (BAPF, A-BAPF, CR-BAPF, CR-BAPF*) test the
//! ring of candidate points in order of increasing distance to the target
//! (ties by ring index) and move to the first one whose total potential is
//! below the agent's own. CAPF takes a fixed-length step down the analytic
//! gradient of the same field.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{bacteria_points, ring_offsets, squared_distance, Point2};
use crate::mu_search::{literal_argmin, min_feasible, MuObjective, MuSearch, MuStrategy};
use crate::potentials::{
    accepts_move, agent_total_potential, branching_total_potential, random_walk_candidates, ParamError, PotentialParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlannerKind {
    #[serde(rename = "capf")]
    Capf,
    #[serde(rename = "bapf")]
    Bapf,
    #[serde(rename = "abapf")]
    ABapf,
    #[serde(rename = "crbapf")]
    CrBapf,
    #[serde(rename = "crbapf-star")]
    CrBapfStar,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::Capf,
        PlannerKind::Bapf,
        PlannerKind::ABapf,
        PlannerKind::CrBapf,
        PlannerKind::CrBapfStar,
    ];

    /// Command-line spelling.
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Capf => "capf",
            PlannerKind::Bapf => "bapf",
            PlannerKind::ABapf => "abapf",
            PlannerKind::CrBapf => "crbapf",
            PlannerKind::CrBapfStar => "crbapf-star",
        }
    }

    /// Display label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            PlannerKind::Capf => "CAPF",
            PlannerKind::Bapf => "BAPF",
            PlannerKind::ABapf => "A-BAPF",
            PlannerKind::CrBapf => "CR-BAPF",
            PlannerKind::CrBapfStar => "CR-BAPF*",
        }
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected capf | bapf | abapf | crbapf | crbapf-star)"))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerConfigError {
    #[error("n_b must be at least 3, got {0}")]
    TooFewBacteria(usize),
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("gradient_epsilon must be >= 0, got {0}")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Potential(#[from] ParamError),
}

impl PlannerConfigError {
    pub fn key(&self) -> &'static str {
        match self {
            PlannerConfigError::TooFewBacteria(_) => "n_b",
            PlannerConfigError::InvalidStep(_) => "step",
            PlannerConfigError::InvalidEpsilon(_) => "gradient_epsilon",
            PlannerConfigError::Potential(e) => e.key(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    pub n_b: usize,
    /// Step length Δr, the ring radius (m).
    pub step: f64,
    pub potential: PotentialParams,
    pub mu_strategy: MuStrategy,
    pub mu_search: MuSearch,
    /// Cap on random-walk escapes per trial; `None` leaves only the step cap.
    pub random_walk_max_attempts: Option<usize>,
    /// CAPF deadlock threshold on the scale-normalised gradient norm.
    pub gradient_epsilon: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            kind: PlannerKind::Bapf,
            n_b: 60,
            step: 0.4,
            potential: PotentialParams::default(),
            mu_strategy: MuStrategy::MinFeasible,
            mu_search: MuSearch::default(),
            random_walk_max_attempts: None,
            gradient_epsilon: 1e-12,
        }
    }
}

impl PlannerConfig {
    pub fn with_kind(kind: PlannerKind) -> Self {
        Self {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), PlannerConfigError> {
        if self.n_b < 3 {
            return Err(PlannerConfigError::TooFewBacteria(self.n_b));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(PlannerConfigError::InvalidStep(self.step));
        }
        if !(self.gradient_epsilon >= 0.0 && self.gradient_epsilon.is_finite()) {
            return Err(PlannerConfigError::InvalidEpsilon(self.gradient_epsilon));
        }
        self.potential.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepDecision {
    Move(Point2),
    Stuck,
}

impl StepDecision {
    pub fn waypoint(self) -> Option<Point2> {
        match self {
            StepDecision::Move(p) => Some(p),
            StepDecision::Stuck => None,
        }
    }
}

/// A decision plus what the planner did to reach it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub decision: StepDecision,
    /// Adaptive decay rate of the selected point (A-BAPF only).
    pub mu_hat: Option<f64>,
    /// The move came from the random-walk fallback.
    pub random_walk: bool,
}

impl From<StepDecision> for StepOutcome {
    fn from(decision: StepDecision) -> Self {
        Self {
            decision,
            mu_hat: None,
            random_walk: false,
        }
    }
}

/// Ring points in scan order: closest to the target first, ties by index.
pub fn scan_order(pos: Point2, target: Point2, step: f64, n_b: usize) -> Vec<(usize, Point2)> {
    let mut ring: Vec<(usize, Point2, f64)> = ring_offsets(step, n_b)
        .enumerate()
        .map(|(k, off)| {
            let p = pos + off;
            (k, p, squared_distance(p, target))
        })
        .collect();
    ring.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    ring.into_iter().map(|(k, p, _)| (k, p)).collect()
}

fn first_accepted<F>(pos: Point2, target: Point2, config: &PlannerConfig, mut accept: F) -> StepDecision
where
    F: FnMut(Point2, bool) -> bool,
{
    let here = squared_distance(pos, target);
    for (_, candidate) in scan_order(pos, target, config.step, config.n_b) {
        let closer = squared_distance(candidate, target) < here;
        if accept(candidate, closer) {
            return StepDecision::Move(candidate);
        }
    }
    StepDecision::Stuck
}

pub fn plan_step_bapf(pos: Point2, target: Point2, detected: &[Point2], config: &PlannerConfig) -> StepDecision {
    let params = &config.potential;
    let j_agent = agent_total_potential(pos, target, detected, params);
    first_accepted(pos, target, config, |c, closer| {
        accepts_move(agent_total_potential(c, target, detected, params), j_agent, closer)
    })
}

/// BAPF scan where each candidate first gets its own repulsion decay rate.
/// Returns the decision and the `μ̂` of the selected point.
pub fn plan_step_abapf(
    pos: Point2,
    target: Point2,
    detected: &[Point2],
    config: &PlannerConfig,
) -> (StepDecision, Option<f64>) {
    let params = &config.potential;
    let j_agent = agent_total_potential(pos, target, detected, params);
    let mut mu_hat = None;
    let decision = first_accepted(pos, target, config, |c, closer| {
        let objective = MuObjective::new(c, target, detected, params);
        let chosen = match config.mu_strategy {
            MuStrategy::MinFeasible => min_feasible(&objective, params, &config.mu_search, |j| {
                accepts_move(j, j_agent, closer)
            })
            .ok(),
            MuStrategy::LiteralArgmin => Some(literal_argmin(&objective, params, &config.mu_search))
                .filter(|choice| accepts_move(choice.objective, j_agent, closer)),
        };
        mu_hat = chosen.map(|choice| choice.mu);
        chosen.is_some()
    });
    if decision == StepDecision::Stuck {
        mu_hat = None;
    }
    (decision, mu_hat)
}

pub fn plan_step_crbapf(pos: Point2, target: Point2, detected: &[Point2], config: &PlannerConfig) -> StepDecision {
    let params = &config.potential;
    let j_agent = branching_total_potential(pos, target, detected, params);
    first_accepted(pos, target, config, |c, closer| {
        accepts_move(branching_total_potential(c, target, detected, params), j_agent, closer)
    })
}

/// CR-BAPF, falling back to one uniformly drawn safe ring point on deadlock.
/// The rng is touched only when CR-BAPF is stuck.
pub fn plan_step_crbapf_star<R: Rng + ?Sized>(
    pos: Point2,
    target: Point2,
    detected: &[Point2],
    config: &PlannerConfig,
    rng: &mut R,
) -> StepOutcome {
    match plan_step_crbapf(pos, target, detected, config) {
        StepDecision::Move(p) => StepDecision::Move(p).into(),
        StepDecision::Stuck => random_walk_step(pos, detected, config, rng),
    }
}

fn random_walk_step<R: Rng + ?Sized>(
    pos: Point2,
    detected: &[Point2],
    config: &PlannerConfig,
    rng: &mut R,
) -> StepOutcome {
    let points = match bacteria_points(pos, config.step, config.n_b) {
        Ok(points) => points,
        Err(_) => return StepDecision::Stuck.into(),
    };
    let safe = random_walk_candidates(&points, detected, config.potential.rho_l);
    if safe.is_empty() {
        return StepDecision::Stuck.into();
    }
    let pick = safe[rng.random_range(0..safe.len())];
    StepOutcome {
        decision: StepDecision::Move(points[pick]),
        mu_hat: None,
        random_walk: true,
    }
}

/// Analytic gradient of `J_a` at `r`.
pub fn capf_gradient(r: Point2, target: Point2, detected: &[Point2], params: &PotentialParams) -> Point2 {
    let attract = 2.0 * params.alpha_t * params.mu_t * (-params.mu_t * squared_distance(r, target)).exp();
    let mut g = (r - target).scale(attract);
    for &o in detected {
        let repel = 2.0 * params.alpha_o * params.mu_o * (-params.mu_o * squared_distance(r, o)).exp();
        g = g - (r - o).scale(repel);
    }
    g
}

/// The gradient of `J_a` divided by its largest term weight, computed in log
/// space so that far-field magnitudes (often below `1e-300`) keep their
/// direction. Returns the scaled gradient and the largest scaled term norm.
fn scaled_gradient(r: Point2, target: Point2, detected: &[Point2], params: &PotentialParams) -> (Point2, f64) {
    let mut terms: Vec<(f64, Point2)> = Vec::with_capacity(detected.len() + 1);
    let to_target = r - target;
    terms.push((
        (2.0 * params.alpha_t * params.mu_t).ln() - params.mu_t * squared_distance(r, target),
        to_target,
    ));
    for &o in detected {
        let away = r - o;
        terms.push((
            (2.0 * params.alpha_o * params.mu_o).ln() - params.mu_o * squared_distance(r, o),
            away.scale(-1.0),
        ));
    }
    let top = terms
        .iter()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|&(w, _)| w)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return (Point2::default(), 0.0);
    }
    let mut g = Point2::default();
    let mut largest: f64 = 0.0;
    for (w, v) in terms {
        let term = v.scale((w - top).exp());
        largest = largest.max(term.norm());
        g = g + term;
    }
    (g, largest)
}

/// Fixed-length steepest descent on `J_a`.
///
/// Stuck when the gradient vanishes, i.e. its scale-normalised norm is at
/// most `gradient_epsilon` times the largest individual term.
pub fn plan_step_capf(pos: Point2, target: Point2, detected: &[Point2], config: &PlannerConfig) -> StepDecision {
    let (g, largest) = scaled_gradient(pos, target, detected, &config.potential);
    let norm = g.norm();
    if norm.is_nan() || norm == 0.0 || norm <= config.gradient_epsilon * largest {
        return StepDecision::Stuck;
    }
    StepDecision::Move(pos - g.scale(config.step / norm))
}

/// Dispatches on `config.kind`.
///
/// `random_walk_allowed = false` disables the CR-BAPF* fallback (used once a
/// trial has spent its random-walk budget).
pub fn plan_step<R: Rng + ?Sized>(
    pos: Point2,
    target: Point2,
    detected: &[Point2],
    config: &PlannerConfig,
    rng: &mut R,
    random_walk_allowed: bool,
) -> StepOutcome {
    match config.kind {
        PlannerKind::Capf => plan_step_capf(pos, target, detected, config).into(),
        PlannerKind::Bapf => plan_step_bapf(pos, target, detected, config).into(),
        PlannerKind::ABapf => {
            let (decision, mu_hat) = plan_step_abapf(pos, target, detected, config);
            StepOutcome {
                decision,
                mu_hat,
                random_walk: false,
            }
        }
        PlannerKind::CrBapf => plan_step_crbapf(pos, target, detected, config).into(),
        PlannerKind::CrBapfStar if random_walk_allowed => plan_step_crbapf_star(pos, target, detected, config, rng),
        PlannerKind::CrBapfStar => plan_step_crbapf(pos, target, detected, config).into(),
    }
}
