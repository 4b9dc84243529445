//! Trial execution: sense, plan, move, with dead-reckoning noise and
//! termination checks.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{squared_distance, Environment, Point2};
use crate::planners::{plan_step, PlannerConfig, PlannerKind, StepDecision, StepOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimConfigError {
    #[error("{key} must be {requirement}, got {value}")]
    OutOfRange {
        key: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

impl SimConfigError {
    pub fn key(&self) -> &'static str {
        match self {
            SimConfigError::OutOfRange { key, .. } => key,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Sensor radius ρ_rn (m); the boundary is inclusive.
    pub detection_range: f64,
    pub goal_radius: f64,
    pub collision_radius: f64,
    /// Per-axis variance of the position error added after every move (m²).
    pub noise_variance: f64,
    pub max_steps: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            detection_range: 8.0,
            goal_radius: 0.4,
            collision_radius: 0.4,
            noise_variance: 0.01,
            max_steps: 1000,
            trials: 4000,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimConfigError> {
        let check = |key, ok: bool, requirement, value: f64| {
            if ok {
                Ok(())
            } else {
                Err(SimConfigError::OutOfRange {
                    key,
                    requirement,
                    value,
                })
            }
        };
        check(
            "detection_range",
            self.detection_range > 0.0 && self.detection_range.is_finite(),
            "positive",
            self.detection_range,
        )?;
        check(
            "goal_radius",
            self.goal_radius > 0.0 && self.goal_radius.is_finite(),
            "positive",
            self.goal_radius,
        )?;
        check(
            "collision_radius",
            self.collision_radius >= 0.0 && self.collision_radius.is_finite(),
            "non-negative",
            self.collision_radius,
        )?;
        check(
            "noise_variance",
            self.noise_variance >= 0.0 && self.noise_variance.is_finite(),
            "non-negative",
            self.noise_variance,
        )?;
        check("max_steps", self.max_steps >= 1, "at least 1", self.max_steps as f64)?;
        check("trials", self.trials >= 1, "at least 1", self.trials as f64)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    LocalMinima,
    Collision,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub outcome: Outcome,
    pub steps: usize,
    /// Visited positions, start included.
    pub trajectory: Vec<Point2>,
    /// Indices into the environment's obstacle list seen at any step.
    pub detected_obstacles: BTreeSet<usize>,
    pub random_walk_steps: usize,
    /// Seconds spent in the sense/plan/move loop.
    pub wall_time: f64,
}

impl TrialResult {
    pub fn final_position(&self) -> Point2 {
        *self.trajectory.last().expect("trajectory always holds the start")
    }
}

/// Obstacles within `detection_range` of `pos`, with their indices.
pub fn sense(env: &Environment, pos: Point2, detection_range: f64) -> Vec<(usize, Point2)> {
    let range_sq = detection_range * detection_range;
    env.obstacles
        .iter()
        .enumerate()
        .filter(|(_, &o)| squared_distance(o, pos) <= range_sq)
        .map(|(i, &o)| (i, o))
        .collect()
}

/// Executes a move to `waypoint` with Gaussian position error on each axis.
pub fn apply_motion<R: Rng + ?Sized>(waypoint: Point2, noise_variance: f64, rng: &mut R) -> Point2 {
    if noise_variance == 0.0 {
        return waypoint;
    }
    let normal = Normal::new(0.0, noise_variance.sqrt()).expect("variance validated non-negative");
    let dx = normal.sample(rng);
    let dy = normal.sample(rng);
    Point2::new(waypoint.x + dx, waypoint.y + dy)
}

/// Runs one navigation episode from `env.start`.
pub fn run_trial<R: Rng + ?Sized>(
    env: &Environment,
    planner: &PlannerConfig,
    sim: &SimConfig,
    rng: &mut R,
) -> TrialResult {
    run_trial_observed(env, planner, sim, rng, |_, _| {})
}

/// [`run_trial`] with a callback receiving every planner outcome and the
/// position it was planned from.
pub fn run_trial_observed<R, F>(
    env: &Environment,
    planner: &PlannerConfig,
    sim: &SimConfig,
    rng: &mut R,
    mut observe: F,
) -> TrialResult
where
    R: Rng + ?Sized,
    F: FnMut(Point2, &StepOutcome),
{
    let started = Instant::now();
    let goal_sq = sim.goal_radius * sim.goal_radius;
    let collision_sq = sim.collision_radius * sim.collision_radius;
    let walk_budget = if planner.kind == PlannerKind::CrBapfStar {
        planner.random_walk_max_attempts
    } else {
        None
    };

    let mut pos = env.start;
    let mut trajectory = vec![pos];
    let mut detected_obstacles = BTreeSet::new();
    let mut detected = Vec::new();
    let mut random_walk_steps = 0;
    let mut steps = 0;

    let outcome = loop {
        if squared_distance(pos, env.target) <= goal_sq {
            break Outcome::Success;
        }
        if steps >= sim.max_steps {
            break Outcome::Timeout;
        }

        detected.clear();
        for (i, o) in sense(env, pos, sim.detection_range) {
            detected_obstacles.insert(i);
            detected.push(o);
        }

        let walk_allowed = walk_budget.is_none_or(|cap| random_walk_steps < cap);
        let step = plan_step(pos, env.target, &detected, planner, rng, walk_allowed);
        observe(pos, &step);
        let waypoint = match step.decision {
            StepDecision::Move(p) => p,
            StepDecision::Stuck => break Outcome::LocalMinima,
        };
        if step.random_walk {
            random_walk_steps += 1;
        }

        pos = apply_motion(waypoint, sim.noise_variance, rng);
        trajectory.push(pos);
        steps += 1;

        if env.obstacles.iter().any(|&o| squared_distance(o, pos) <= collision_sq) {
            break Outcome::Collision;
        }
    };

    TrialResult {
        outcome,
        steps,
        trajectory,
        detected_obstacles,
        random_walk_steps,
        wall_time: started.elapsed().as_secs_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::bacteria_points;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn open_field() -> Environment {
        Environment::new(30.0, 30.0, Point2::new(3.0, 3.0), Point2::new(22.0, 22.0), vec![]).unwrap()
    }

    #[test]
    fn sense_examples() {
        let env = Environment::new(
            30.0,
            30.0,
            Point2::new(3.0, 3.0),
            Point2::new(22.0, 22.0),
            vec![
                Point2::new(20.0, 20.0),
                Point2::new(11.0, 3.0),
                Point2::new(3.0, 11.0001),
            ],
        )
        .unwrap();
        let seen = sense(&env, Point2::new(3.0, 3.0), 8.0);
        assert_eq!(seen, vec![(1, Point2::new(11.0, 3.0))]);
        assert!(sense(&env, Point2::new(25.0, 3.0), 3.0).is_empty());
    }

    #[test]
    fn motion_without_noise_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let before = rng.clone();
        let p = Point2::new(1.25, -3.5);
        assert_eq!(apply_motion(p, 0.0, &mut rng), p);
        assert_eq!(rng, before);
    }

    #[test]
    fn motion_noise_reproducible() {
        let p = Point2::new(0.0, 0.0);
        let a: Vec<Point2> = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            (0..5).map(|_| apply_motion(p, 0.01, &mut rng)).collect()
        };
        let b: Vec<Point2> = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            (0..5).map(|_| apply_motion(p, 0.01, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_open_field_takes_straight_line_steps() {
        let sim = SimConfig {
            noise_variance: 0.0,
            ..Default::default()
        };
        let env = open_field();
        let planner = PlannerConfig::default();
        let result = run_trial(&env, &planner, &sim, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(result.outcome, Outcome::Success);
        // ceil((26.870 - 0.4) / 0.4) = 67; the 45° heading is on the 60-point ring
        let distance = env.start.distance(env.target);
        let expected = ((distance - sim.goal_radius) / planner.step).ceil() as usize;
        assert_eq!(expected, 67);
        assert_eq!(result.steps, expected);
        assert_eq!(result.trajectory.len(), result.steps + 1);
        assert!(result.final_position().distance(env.target) <= sim.goal_radius);
    }

    #[test]
    fn noisy_open_field_succeeds_near_straight_line_count() {
        let env = open_field();
        let result = run_trial(
            &env,
            &PlannerConfig::default(),
            &SimConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(4),
        );
        assert_eq!(result.outcome, Outcome::Success);
        assert!((62..=75).contains(&result.steps), "{}", result.steps);
    }

    #[test]
    fn enclosed_start_is_local_minimum() {
        let start = Point2::new(3.0, 3.0);
        // obstacles on every candidate point
        let ring = bacteria_points(start, 0.4, 60).unwrap();
        let env = Environment::new(30.0, 30.0, start, Point2::new(22.0, 22.0), ring).unwrap();
        let result = run_trial(
            &env,
            &PlannerConfig::default(),
            &SimConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_eq!(result.outcome, Outcome::LocalMinima);
        assert_eq!(result.steps, 0);
        assert_eq!(result.detected_obstacles.len(), 60);
    }

    #[test]
    fn step_cap_times_out() {
        let sim = SimConfig {
            max_steps: 5,
            ..Default::default()
        };
        let result = run_trial(
            &open_field(),
            &PlannerConfig::default(),
            &sim,
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_eq!(result.outcome, Outcome::Timeout);
        assert_eq!(result.steps, 5);
        assert_eq!(result.trajectory.len(), 6);
    }

    #[test]
    fn collision_detected_after_move() {
        // CAPF walks straight toward the target; park an obstacle on the line
        // too close to the start for the repulsion to matter first.
        let start = Point2::new(3.0, 3.0);
        let env = Environment::new(30.0, 30.0, start, Point2::new(6.0, 3.0), vec![Point2::new(3.8, 3.0)]).unwrap();
        let planner = PlannerConfig {
            potential: crate::potentials::PotentialParams {
                alpha_o: 1e-9,
                ..Default::default()
            },
            ..PlannerConfig::with_kind(PlannerKind::Capf)
        };
        let sim = SimConfig {
            noise_variance: 0.0,
            ..Default::default()
        };
        let result = run_trial(&env, &planner, &sim, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(result.outcome, Outcome::Collision);
        assert_eq!(result.steps, 1);
    }

    #[test]
    fn config_validation_names_key() {
        let bad = SimConfig {
            detection_range: 0.0,
            ..Default::default()
        };
        assert_eq!(bad.validate().unwrap_err().key(), "detection_range");
        let bad = SimConfig {
            max_steps: 0,
            ..Default::default()
        };
        assert_eq!(bad.validate().unwrap_err().key(), "max_steps");
    }

    #[test]
    fn random_walk_budget_is_enforced() {
        let start = Point2::new(3.0, 3.0);
        // a bowl of four strong obstacles traps CR-BAPF at the start
        let obstacles = vec![
            Point2::new(4.5, 3.0),
            Point2::new(1.5, 3.0),
            Point2::new(3.0, 4.5),
            Point2::new(3.0, 1.5),
        ];
        let env = Environment::new(30.0, 30.0, start, Point2::new(22.0, 22.0), obstacles).unwrap();
        let planner = PlannerConfig {
            random_walk_max_attempts: Some(3),
            potential: crate::potentials::PotentialParams {
                alpha_o: 1e5,
                mu_o: 1.0,
                ..Default::default()
            },
            ..PlannerConfig::with_kind(PlannerKind::CrBapfStar)
        };
        let sim = SimConfig {
            noise_variance: 0.0,
            ..Default::default()
        };
        let result = run_trial(&env, &planner, &sim, &mut ChaCha8Rng::seed_from_u64(9));
        assert!((1..=3).contains(&result.random_walk_steps));
    }
}
