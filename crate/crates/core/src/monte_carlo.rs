//! Parallel Monte Carlo driver.
//!
//! Trial `i` draws everything (environment, noise, random walk) from its own
//! ChaCha8 stream keyed by `(seed, i)`, so results do not depend on thread
//! count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{sample_environment, EnvGenConfig, Environment, GeometryError};
use crate::metrics::{compute_metrics, MetricsError, MetricsSummary};
use crate::planners::{PlannerConfig, PlannerConfigError};
use crate::simulation::{run_trial, SimConfig, SimConfigError, TrialResult};

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Planner(#[from] PlannerConfigError),
    #[error(transparent)]
    Sim(#[from] SimConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("failed to build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Independent random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub summary: MetricsSummary,
    pub results: Vec<TrialResult>,
    pub environments: Vec<Environment>,
}

/// Runs `sim.trials` trials on fresh environments. `jobs` caps the worker
/// count; `None` uses rayon's default.
pub fn run_monte_carlo(
    env_gen: &EnvGenConfig,
    planner: &PlannerConfig,
    sim: &SimConfig,
    jobs: Option<usize>,
) -> Result<MonteCarloRun, MonteCarloError> {
    env_gen.validate()?;
    planner.validate()?;
    sim.validate()?;

    let one = |i: usize| -> Result<(Environment, TrialResult), GeometryError> {
        let mut rng = trial_rng(sim.seed, i as u64);
        let env = sample_environment(env_gen, &mut rng)?;
        let result = run_trial(&env, planner, sim, &mut rng);
        Ok((env, result))
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build()?;
    let pairs: Vec<(Environment, TrialResult)> =
        pool.install(|| (0..sim.trials).into_par_iter().map(one).collect::<Result<_, _>>())?;

    let (environments, results): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let summary = compute_metrics(&results, &environments)?;
    Ok(MonteCarloRun {
        summary,
        results,
        environments,
    })
}
