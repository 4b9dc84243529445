//! Potential field navigation for a point agent in unknown, cluttered 2D
//! worlds.
//!
//! Five planners share one potential field: a gradient-descent baseline
//! (CAPF) and four planners that choose among a ring of candidate
//! "bacteria" points (BAPF, the adaptive A-BAPF, the branching CR-BAPF and
//! CR-BAPF* with a random-walk escape). [`monte_carlo`] runs them over
//! random obstacle fields and reports success rate, step count, safety
//! distance and run time.

pub mod geometry;
pub mod metrics;
pub mod monte_carlo;
pub mod mu_search;
pub mod planners;
pub mod potentials;
pub mod simulation;

pub use geometry::{bacteria_points, sample_environment, squared_distance, EnvGenConfig, Environment, Point2};
pub use metrics::{compute_metrics, MetricsSummary};
pub use monte_carlo::{run_monte_carlo, trial_rng, MonteCarloRun};
pub use mu_search::{optimize_mu, MuSearch, MuStrategy};
pub use planners::{plan_step, PlannerConfig, PlannerKind, StepDecision, StepOutcome};
pub use potentials::PotentialParams;
pub use simulation::{apply_motion, run_trial, sense, Outcome, SimConfig, TrialResult};
