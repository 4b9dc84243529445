//! Batch metrics: success rate, mean steps, safety and mean run time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Environment, Point2};
use crate::simulation::{Outcome, TrialResult};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no trial results to summarise")]
    Empty,
    #[error("{results} results but {environments} environments")]
    LengthMismatch { results: usize, environments: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub trials: usize,
    pub successes: usize,
    /// `N_s / N_m`.
    pub success_rate: f64,
    /// Mean step count over successful trials; `None` without successes.
    pub avg_steps: Option<f64>,
    /// Mean per-trial safety over successful trials that detected at least
    /// one obstacle (m).
    pub safety: Option<f64>,
    /// Mean loop wall time over all trials (s).
    pub avg_runtime: f64,
}

/// Mean over the detected obstacles of the closest approach along the
/// trajectory. `None` when nothing was detected.
pub fn trial_safety(result: &TrialResult, obstacles: &[Point2]) -> Option<f64> {
    if result.detected_obstacles.is_empty() {
        return None;
    }
    let total: f64 = result
        .detected_obstacles
        .iter()
        .map(|&i| {
            let o = obstacles[i];
            result
                .trajectory
                .iter()
                .map(|p| p.distance(o))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Some(total / result.detected_obstacles.len() as f64)
}

/// Folds trial results into a summary; `environments[i]` must be the world
/// `results[i]` ran in.
pub fn compute_metrics(results: &[TrialResult], environments: &[Environment]) -> Result<MetricsSummary, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    if results.len() != environments.len() {
        return Err(MetricsError::LengthMismatch {
            results: results.len(),
            environments: environments.len(),
        });
    }

    let mut successes = 0usize;
    let mut step_sum = 0usize;
    let mut safety_sum = 0.0;
    let mut safety_count = 0usize;
    let mut runtime_sum = 0.0;
    for (result, env) in results.iter().zip(environments) {
        runtime_sum += result.wall_time;
        if result.outcome != Outcome::Success {
            continue;
        }
        successes += 1;
        step_sum += result.steps;
        if let Some(s) = trial_safety(result, &env.obstacles) {
            safety_sum += s;
            safety_count += 1;
        }
    }

    let trials = results.len();
    Ok(MetricsSummary {
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        avg_steps: (successes > 0).then(|| step_sum as f64 / successes as f64),
        safety: (safety_count > 0).then(|| safety_sum / safety_count as f64),
        avg_runtime: runtime_sum / trials as f64,
    })
}
