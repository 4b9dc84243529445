//! Per-candidate choice of the repulsion decay rate `μ` for the adaptive planner.
//!
//! The objective at a bacteria point is
//! `J̄(μ) = J_t(r_b) + Σ α_o · exp(−μ · ρ_n)` over the detected obstacles,
//! minimised over `μ ∈ [μ_min, μ_max]`. Every term with `ρ_n > 0` is
//! strictly decreasing in `μ`, so the true minimiser is `μ_max` whenever
//! such a term exists. Two strategies are offered:
//!
//! * [`MuStrategy::LiteralArgmin`]: coarse grid then golden-section refinement.
//! * [`MuStrategy::MinFeasible`]: the smallest grid `μ` that already lets the
//!   candidate pass the movement criterion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{squared_distance, Point2};
use crate::potentials::{movement_criterion, target_potential, PotentialParams};

/// `(3 − √5) / 2`
const INV_PHI_SQ: f64 = 0.381_966_011_250_105_1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuStrategy {
    LiteralArgmin,
    #[default]
    MinFeasible,
}

impl std::str::FromStr for MuStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal-argmin" => Ok(MuStrategy::LiteralArgmin),
            "min-feasible" => Ok(MuStrategy::MinFeasible),
            other => Err(format!(
                "unknown mu strategy `{other}` (expected literal-argmin | min-feasible)"
            )),
        }
    }
}

impl std::fmt::Display for MuStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MuStrategy::LiteralArgmin => "literal-argmin",
            MuStrategy::MinFeasible => "min-feasible",
        })
    }
}

/// Search resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuSearch {
    /// Uniform grid size for the coarse argmin scan.
    pub coarse_points: usize,
    /// Golden-section stops once the bracket is narrower than this
    /// fraction of `μ_max − μ_min`.
    pub relative_width: f64,
    /// Uniform grid size for the feasibility scan. 1000 points over
    /// `[1, 1000]` is the integer grid.
    pub feasible_points: usize,
}

impl Default for MuSearch {
    fn default() -> Self {
        Self {
            coarse_points: 64,
            relative_width: 1e-4,
            feasible_points: 1000,
        }
    }
}

/// The chosen decay rate and the objective evaluated there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuChoice {
    pub mu: f64,
    pub objective: f64,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("no mu in range satisfies the movement criterion")]
pub struct Infeasible;

/// `J̄(μ)` at one bacteria point with the squared obstacle distances cached.
#[derive(Debug, Clone)]
pub struct MuObjective {
    attraction: f64,
    alpha_o: f64,
    rho: Vec<f64>,
}

impl MuObjective {
    pub fn new(bacteria_pt: Point2, target: Point2, detected: &[Point2], params: &PotentialParams) -> Self {
        Self {
            attraction: target_potential(bacteria_pt, target, params),
            alpha_o: params.alpha_o,
            rho: detected.iter().map(|&o| squared_distance(bacteria_pt, o)).collect(),
        }
    }

    pub fn eval(&self, mu: f64) -> f64 {
        let repulsive: f64 = self.rho.iter().map(|&rho| self.alpha_o * (-mu * rho).exp()).sum();
        self.attraction + repulsive
    }

    /// True when no term depends on `μ` (no obstacles, or all at distance 0).
    pub fn is_constant(&self) -> bool {
        self.rho.iter().all(|&rho| rho == 0.0)
    }
}

/// `n` points spread uniformly over `[lo, hi]`, endpoints exact.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Golden-section search for a minimiser of a unimodal `f` on `[lo, hi]`.
/// Returns the midpoint of the final bracket.
pub fn golden_section_minimize<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    if hi < lo {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x1 = lo + INV_PHI_SQ * (hi - lo);
    let mut x2 = hi - INV_PHI_SQ * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > width {
        // ties move right, toward larger mu
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + INV_PHI_SQ * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - INV_PHI_SQ * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Coarse grid then golden-section refinement around the best grid point.
///
/// A `μ`-independent objective returns `μ_min`. Otherwise ties between
/// equal objective values (e.g. terms that have all underflowed) resolve to
/// the larger `μ`, which matches the analytic minimiser.
pub fn literal_argmin(objective: &MuObjective, params: &PotentialParams, search: &MuSearch) -> MuChoice {
    let (lo, hi) = (params.mu_min, params.mu_max);
    if objective.is_constant() || lo == hi {
        return MuChoice {
            mu: lo,
            objective: objective.eval(lo),
        };
    }
    let grid = uniform_grid(lo, hi, search.coarse_points.max(2));
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, &mu) in grid.iter().enumerate() {
        let v = objective.eval(mu);
        if v <= best_val {
            best = i;
            best_val = v;
        }
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden_section_minimize(|mu| objective.eval(mu), a, b, search.relative_width * (hi - lo));

    let mut choice = MuChoice {
        mu: grid[best],
        objective: best_val,
    };
    for mu in [a, refined, b] {
        let v = objective.eval(mu);
        if v < choice.objective || (v == choice.objective && mu > choice.mu) {
            choice = MuChoice { mu, objective: v };
        }
    }
    choice
}

/// Smallest grid `μ` for which `accept(J̄(μ))` holds.
///
/// `J̄` is nonincreasing in `μ`, so feasibility is monotone along the grid
/// and a binary search returns the same point a lower scan would.
pub fn min_feasible<A: Fn(f64) -> bool>(
    objective: &MuObjective,
    params: &PotentialParams,
    search: &MuSearch,
    accept: A,
) -> Result<MuChoice, Infeasible> {
    let grid = uniform_grid(params.mu_min, params.mu_max, search.feasible_points.max(1));
    let last = grid.len() - 1;
    let top = objective.eval(grid[last]);
    if !accept(top) {
        return Err(Infeasible);
    }
    let bottom = objective.eval(grid[0]);
    if accept(bottom) {
        return Ok(MuChoice {
            mu: grid[0],
            objective: bottom,
        });
    }
    // invariant: grid[lo] infeasible, grid[hi] feasible
    let (mut lo, mut hi, mut hi_val) = (0, last, top);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = objective.eval(grid[mid]);
        if accept(v) {
            hi = mid;
            hi_val = v;
        } else {
            lo = mid;
        }
    }
    Ok(MuChoice {
        mu: grid[hi],
        objective: hi_val,
    })
}

/// Chooses `μ̂` for one bacteria point.
///
/// For [`MuStrategy::MinFeasible`] the acceptance test is the strict
/// movement criterion against `j_agent`; [`Infeasible`] means no `μ` in
/// range unlocks the point. [`MuStrategy::LiteralArgmin`] never fails.
pub fn optimize_mu(
    bacteria_pt: Point2,
    target: Point2,
    detected: &[Point2],
    params: &PotentialParams,
    strategy: MuStrategy,
    search: &MuSearch,
    j_agent: f64,
) -> Result<MuChoice, Infeasible> {
    let objective = MuObjective::new(bacteria_pt, target, detected, params);
    match strategy {
        MuStrategy::LiteralArgmin => Ok(literal_argmin(&objective, params, search)),
        MuStrategy::MinFeasible => min_feasible(&objective, params, search, |j| movement_criterion(j, j_agent)),
    }
}
