//! Experiment configuration files.
//!
//! ```toml
//! [env]
//! n_lower = 20
//! n_upper = 45
//!
//! [planner]
//! algo = "crbapf-star"
//! mu_o = 500.0
//!
//! [sim]
//! trials = 500
//! seed = 7
//! ```
//!
//! Every key is optional. Unset radii follow the planner: `spawn_clearance`
//! and `collision_radius` default to `rho_l`, `goal_radius` to `step`.

use std::path::Path;

use apf_core::{EnvGenConfig, MuSearch, MuStrategy, PlannerConfig, PlannerKind, Point2, PotentialParams, SimConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    /// The offending key, for validation errors.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    env: EnvSection,
    #[serde(default)]
    planner: PlannerSection,
    #[serde(default)]
    sim: SimSection,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_lower: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_upper: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    length_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    length_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<Point2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<Point2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spawn_clearance: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlannerSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    algo: Option<PlannerKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_o: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_o: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_strategy: Option<MuStrategy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_coarse_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_relative_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_feasible_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    random_walk_max_attempts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gradient_epsilon: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    detection_range: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    goal_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    collision_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub env: EnvGenConfig,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config::from_toml_str("").expect("defaults are valid")
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub algo: Option<PlannerKind>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub mu_strategy: Option<MuStrategy>,
}

impl Config {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Config, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })?,
            None => String::new(),
        };
        Config::parse(&text, overrides)
    }

    pub fn from_toml_str(text: &str) -> Result<Config, ConfigError> {
        Config::parse(text, &Overrides::default())
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Config, ConfigError> {
        let mut file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if overrides.algo.is_some() {
            file.planner.algo = overrides.algo;
        }
        if overrides.mu_strategy.is_some() {
            file.planner.mu_strategy = overrides.mu_strategy;
        }
        if overrides.trials.is_some() {
            file.sim.trials = overrides.trials;
        }
        if overrides.seed.is_some() {
            file.sim.seed = overrides.seed;
        }
        let config = file.resolve();
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| ConfigError::Invalid {
            key: key.to_string(),
            message,
        };
        self.planner.validate().map_err(|e| invalid(e.key(), e.to_string()))?;
        self.sim.validate().map_err(|e| invalid(e.key(), e.to_string()))?;
        let env = &self.env;
        if env.n_lower > env.n_upper {
            return Err(invalid(
                "n_lower",
                format!("{} exceeds n_upper ({})", env.n_lower, env.n_upper),
            ));
        }
        for (key, value) in [("length_x", env.length_x), ("length_y", env.length_y)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(key, format!("must be positive, got {value}")));
            }
        }
        if !(env.spawn_clearance >= 0.0 && env.spawn_clearance.is_finite()) {
            return Err(invalid(
                "spawn_clearance",
                format!("must be >= 0, got {}", env.spawn_clearance),
            ));
        }
        env.validate().map_err(|e| invalid("target", e.to_string()))?;
        let search = &self.planner.mu_search;
        if search.coarse_points < 2 {
            return Err(invalid("mu_coarse_points", "must be at least 2".into()));
        }
        if search.feasible_points < 1 {
            return Err(invalid("mu_feasible_points", "must be at least 1".into()));
        }
        if !(search.relative_width > 0.0 && search.relative_width < 1.0) {
            return Err(invalid(
                "mu_relative_width",
                format!("must lie in (0, 1), got {}", search.relative_width),
            ));
        }
        Ok(())
    }

    /// Every key with its effective value; parsing the result gives back
    /// `self`.
    pub fn to_toml(&self) -> String {
        let (env, planner, sim) = (&self.env, &self.planner, &self.sim);
        let p = &planner.potential;
        let file = ConfigFile {
            env: EnvSection {
                n_lower: Some(env.n_lower),
                n_upper: Some(env.n_upper),
                length_x: Some(env.length_x),
                length_y: Some(env.length_y),
                start: Some(env.start),
                target: Some(env.target),
                spawn_clearance: Some(env.spawn_clearance),
            },
            planner: PlannerSection {
                algo: Some(planner.kind),
                n_b: Some(planner.n_b),
                step: Some(planner.step),
                alpha_t: Some(p.alpha_t),
                mu_t: Some(p.mu_t),
                alpha_o: Some(p.alpha_o),
                mu_o: Some(p.mu_o),
                rho_l: Some(p.rho_l),
                rho_u: Some(p.rho_u),
                mu_min: Some(p.mu_min),
                mu_max: Some(p.mu_max),
                mu_strategy: Some(planner.mu_strategy),
                mu_coarse_points: Some(planner.mu_search.coarse_points),
                mu_relative_width: Some(planner.mu_search.relative_width),
                mu_feasible_points: Some(planner.mu_search.feasible_points),
                random_walk_max_attempts: planner.random_walk_max_attempts,
                gradient_epsilon: Some(planner.gradient_epsilon),
            },
            sim: SimSection {
                detection_range: Some(sim.detection_range),
                goal_radius: Some(sim.goal_radius),
                collision_radius: Some(sim.collision_radius),
                noise_variance: Some(sim.noise_variance),
                max_steps: Some(sim.max_steps),
                trials: Some(sim.trials),
                seed: Some(sim.seed),
            },
        };
        toml::to_string(&file).expect("config serializes")
    }
}

impl ConfigFile {
    fn resolve(self) -> Config {
        let (env, planner, sim) = (self.env, self.planner, self.sim);

        let pd = PotentialParams::default();
        let potential = PotentialParams {
            alpha_t: planner.alpha_t.unwrap_or(pd.alpha_t),
            mu_t: planner.mu_t.unwrap_or(pd.mu_t),
            alpha_o: planner.alpha_o.unwrap_or(pd.alpha_o),
            mu_o: planner.mu_o.unwrap_or(pd.mu_o),
            rho_l: planner.rho_l.unwrap_or(pd.rho_l),
            rho_u: planner.rho_u.unwrap_or(pd.rho_u),
            mu_min: planner.mu_min.unwrap_or(pd.mu_min),
            mu_max: planner.mu_max.unwrap_or(pd.mu_max),
        };
        let md = MuSearch::default();
        let plan_d = PlannerConfig::default();
        let planner = PlannerConfig {
            kind: planner.algo.unwrap_or(plan_d.kind),
            n_b: planner.n_b.unwrap_or(plan_d.n_b),
            step: planner.step.unwrap_or(plan_d.step),
            potential,
            mu_strategy: planner.mu_strategy.unwrap_or(plan_d.mu_strategy),
            mu_search: MuSearch {
                coarse_points: planner.mu_coarse_points.unwrap_or(md.coarse_points),
                relative_width: planner.mu_relative_width.unwrap_or(md.relative_width),
                feasible_points: planner.mu_feasible_points.unwrap_or(md.feasible_points),
            },
            random_walk_max_attempts: planner.random_walk_max_attempts,
            gradient_epsilon: planner.gradient_epsilon.unwrap_or(plan_d.gradient_epsilon),
        };

        let ed = EnvGenConfig::default();
        let env = EnvGenConfig {
            n_lower: env.n_lower.unwrap_or(ed.n_lower),
            n_upper: env.n_upper.unwrap_or(ed.n_upper),
            length_x: env.length_x.unwrap_or(ed.length_x),
            length_y: env.length_y.unwrap_or(ed.length_y),
            start: env.start.unwrap_or(ed.start),
            target: env.target.unwrap_or(ed.target),
            spawn_clearance: env.spawn_clearance.unwrap_or(potential.rho_l),
        };

        let sd = SimConfig::default();
        let sim = SimConfig {
            detection_range: sim.detection_range.unwrap_or(sd.detection_range),
            goal_radius: sim.goal_radius.unwrap_or(planner.step),
            collision_radius: sim.collision_radius.unwrap_or(potential.rho_l),
            noise_variance: sim.noise_variance.unwrap_or(sd.noise_variance),
            max_steps: sim.max_steps.unwrap_or(sd.max_steps),
            trials: sim.trials.unwrap_or(sd.trials),
            seed: sim.seed.unwrap_or(sd.seed),
        };

        Config { env, planner, sim }
    }
}
