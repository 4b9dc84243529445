//! Planar geometry for a point agent: positions, the ring of bacteria
//! points around the agent, and random obstacle fields.

use std::f64::consts::TAU;
use std::ops::{Add, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on rejection-sampling draws for a single obstacle.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("bacteria point count must be at least 1")]
    NoBacteriaPoints,
    #[error("step length must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid environment generator config: {0}")]
    InvalidGenConfig(String),
    #[error("could not place obstacle {index} after {attempts} attempts; spawn clearance too large")]
    PlacementFailed { index: usize, attempts: usize },
}

/// A position in the plane, in meters.
///
/// Serializes as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (*self - other).norm()
    }

    pub fn scale(&self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2::new(x, y)
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// `‖a − b‖²`.
#[inline]
pub fn squared_distance(a: Point2, b: Point2) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// Candidate next positions on a circle of radius `step` around `center`.
///
/// Point `k` sits at angle `2πk / n_b`, so point 0 is due east of the center.
pub fn bacteria_points(center: Point2, step: f64, n_b: usize) -> Result<Vec<Point2>, GeometryError> {
    if n_b == 0 {
        return Err(GeometryError::NoBacteriaPoints);
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(GeometryError::InvalidStep(step));
    }
    Ok(ring_offsets(step, n_b).map(|offset| center + offset).collect())
}

pub(crate) fn ring_offsets(step: f64, n_b: usize) -> impl Iterator<Item = Point2> {
    (0..n_b).map(move |k| {
        let theta = TAU * k as f64 / n_b as f64;
        let (sin, cos) = theta.sin_cos();
        Point2::new(step * cos, step * sin)
    })
}

/// A rectangular world `[0, length_x] × [0, length_y]` with point obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnvironment")]
pub struct Environment {
    pub length_x: f64,
    pub length_y: f64,
    pub start: Point2,
    pub target: Point2,
    pub obstacles: Vec<Point2>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvironment {
    length_x: f64,
    length_y: f64,
    start: Point2,
    target: Point2,
    obstacles: Vec<Point2>,
}

impl TryFrom<RawEnvironment> for Environment {
    type Error = GeometryError;

    fn try_from(raw: RawEnvironment) -> Result<Self, Self::Error> {
        Environment::new(raw.length_x, raw.length_y, raw.start, raw.target, raw.obstacles)
    }
}

impl Environment {
    pub fn new(
        length_x: f64,
        length_y: f64,
        start: Point2,
        target: Point2,
        obstacles: Vec<Point2>,
    ) -> Result<Self, GeometryError> {
        let env = Self {
            length_x,
            length_y,
            start,
            target,
            obstacles,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidEnvironment(msg));
        if !(self.length_x > 0.0 && self.length_x.is_finite()) {
            return bad(format!("length_x must be positive, got {}", self.length_x));
        }
        if !(self.length_y > 0.0 && self.length_y.is_finite()) {
            return bad(format!("length_y must be positive, got {}", self.length_y));
        }
        if !self.start.is_finite() || !self.target.is_finite() {
            return bad("start and target must be finite".into());
        }
        if self.start == self.target {
            return bad("start and target coincide".into());
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !self.contains(*o) {
                return bad(format!("obstacle {i} at ({}, {}) lies outside the bounds", o.x, o.y));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.is_finite() && (0.0..=self.length_x).contains(&p.x) && (0.0..=self.length_y).contains(&p.y)
    }
}

/// Parameters for drawing random obstacle fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvGenConfig {
    pub n_lower: usize,
    pub n_upper: usize,
    pub length_x: f64,
    pub length_y: f64,
    pub start: Point2,
    pub target: Point2,
    /// Minimum distance of every obstacle from both start and target.
    pub spawn_clearance: f64,
}

impl Default for EnvGenConfig {
    fn default() -> Self {
        Self {
            n_lower: 20,
            n_upper: 45,
            length_x: 30.0,
            length_y: 30.0,
            start: Point2::new(3.0, 3.0),
            target: Point2::new(22.0, 22.0),
            spawn_clearance: 0.4,
        }
    }
}

impl EnvGenConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidGenConfig(msg));
        if self.n_lower > self.n_upper {
            return bad(format!("n_lower ({}) exceeds n_upper ({})", self.n_lower, self.n_upper));
        }
        if !(self.spawn_clearance >= 0.0 && self.spawn_clearance.is_finite()) {
            return bad(format!("spawn_clearance must be >= 0, got {}", self.spawn_clearance));
        }
        // Reuse the environment checks for bounds and start/target.
        Environment::new(self.length_x, self.length_y, self.start, self.target, Vec::new())
            .map(|_| ())
            .map_err(|e| GeometryError::InvalidGenConfig(e.to_string()))
    }
}

/// Draws an obstacle count from `U{n_lower, …, n_upper}` and places each
/// obstacle uniformly over the bounds, redrawing any that land within
/// `spawn_clearance` of the start or the target.
pub fn sample_environment<R: Rng + ?Sized>(config: &EnvGenConfig, rng: &mut R) -> Result<Environment, GeometryError> {
    config.validate()?;
    let count = rng.random_range(config.n_lower..=config.n_upper);
    let clearance_sq = config.spawn_clearance * config.spawn_clearance;
    let mut obstacles = Vec::with_capacity(count);
    for index in 0..count {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let p = Point2::new(
                rng.random_range(0.0..=config.length_x),
                rng.random_range(0.0..=config.length_y),
            );
            if squared_distance(p, config.start) >= clearance_sq && squared_distance(p, config.target) >= clearance_sq {
                placed = Some(p);
                break;
            }
        }
        match placed {
            Some(p) => obstacles.push(p),
            None => {
                return Err(GeometryError::PlacementFailed {
                    index,
                    attempts: MAX_PLACEMENT_ATTEMPTS,
                })
            }
        }
    }
    Environment::new(config.length_x, config.length_y, config.start, config.target, obstacles)
}
