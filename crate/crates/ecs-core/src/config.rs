//! Coordinate configurations on the circle and the coupling parameter sets
//! the operator identities are verified at.

use crate::error::{Error, Result};
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Default minimum circular separation enforced between any two
/// coordinates. Well above the pole guard on |theta| for every admissible
/// nome.
pub const DEFAULT_MIN_SEPARATION: f64 = 1e-3;

/// Separation used when sampling sweep configurations; generous enough that
/// second-derivative stencils never step near a pole.
pub const SWEEP_MIN_SEPARATION: f64 = 0.1;

/// Maximum rejection-sampling attempts before giving up loudly.
pub const MAX_SAMPLE_ATTEMPTS: usize = 100;

/// Reduce an angle difference to the fundamental interval (-pi, pi].
pub(crate) fn wrap_angle(d: f64) -> f64 {
    let w = d.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Two families of particle coordinates on [-pi, pi], kept pairwise
/// separated (as angles on the circle) so that every pairwise theta value
/// stays away from its zeros.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration {
    x: Vec<f64>,
    y: Vec<f64>,
    #[serde(skip)]
    min_separation: f64,
}

impl Configuration {
    /// Validates and builds a configuration with the default separation.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::with_separation(x, y, DEFAULT_MIN_SEPARATION)
    }

    /// Validates and builds a configuration requiring circular separation
    /// of at least `min_separation` between all coordinates, mixed pairs
    /// included.
    pub fn with_separation(x: Vec<f64>, y: Vec<f64>, min_separation: f64) -> Result<Self> {
        if x.is_empty() && y.is_empty() {
            return Err(Error::InvalidConfiguration(
                "at least one coordinate is required".into(),
            ));
        }
        if min_separation.is_nan() || min_separation <= 0.0 {
            return Err(Error::InvalidConfiguration(format!(
                "minimum separation must be positive, got {min_separation}"
            )));
        }
        for &c in x.iter().chain(y.iter()) {
            if !c.is_finite() || !(-PI..=PI).contains(&c) {
                return Err(Error::InvalidConfiguration(format!(
                    "coordinate {c} is outside [-pi, pi]"
                )));
            }
        }
        let cfg = Self {
            x,
            y,
            min_separation,
        };
        let sep = cfg.min_pairwise_separation();
        if sep < min_separation {
            return Err(Error::InvalidConfiguration(format!(
                "pairwise separation {sep:.3e} below required {min_separation:.3e}"
            )));
        }
        Ok(cfg)
    }

    /// Draws a configuration of `n` + `m` coordinates uniformly on
    /// [-pi, pi), rejecting draws whose circular separation falls below
    /// `min_separation`. Fails after [`MAX_SAMPLE_ATTEMPTS`] rejections
    /// rather than skipping silently.
    pub fn sample<R: Rng + ?Sized>(
        n: usize,
        m: usize,
        min_separation: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if n + m == 0 {
            return Err(Error::InvalidConfiguration(
                "at least one coordinate is required".into(),
            ));
        }
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            let coords: Vec<f64> = (0..n + m).map(|_| rng.gen_range(-PI..PI)).collect();
            let ok = coords.iter().enumerate().all(|(i, &a)| {
                coords[..i]
                    .iter()
                    .all(|&b| wrap_angle(a - b).abs() >= min_separation)
            });
            if ok {
                let (x, y) = coords.split_at(n);
                return Self::with_separation(x.to_vec(), y.to_vec(), min_separation);
            }
        }
        Err(Error::SamplingFailed {
            min_separation,
            attempts: MAX_SAMPLE_ATTEMPTS,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    /// Smallest circular distance between any two coordinates.
    pub fn min_pairwise_separation(&self) -> f64 {
        let all: Vec<f64> = self.x.iter().chain(self.y.iter()).copied().collect();
        let mut sep = f64::INFINITY;
        for (i, &a) in all.iter().enumerate() {
            for &b in &all[..i] {
                sep = sep.min(wrap_angle(a - b).abs());
            }
        }
        sep
    }

    /// Returns a copy with every coordinate shifted by `a` and wrapped back
    /// to the fundamental interval.
    pub fn translated(&self, a: f64) -> Self {
        let shift = |c: &f64| wrap_angle(c + a);
        Self {
            x: self.x.iter().map(shift).collect(),
            y: self.y.iter().map(shift).collect(),
            min_separation: self.min_separation,
        }
    }
}

/// General coupling set (lambda1, lambda2, lambda3, A) weighting the three
/// product blocks of G and the relative sign of the y-family Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralCoupling {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub a: f64,
}

impl GeneralCoupling {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64, a: f64) -> Result<Self> {
        for (name, v) in [
            ("lambda1", lambda1),
            ("lambda2", lambda2),
            ("lambda3", lambda3),
            ("A", a),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidCoupling(format!("{name} = {v} is not finite")));
            }
        }
        if lambda1 <= 0.0 || lambda2 <= 0.0 {
            return Err(Error::InvalidCoupling(format!(
                "lambda1 = {lambda1} and lambda2 = {lambda2} must both be positive"
            )));
        }
        Ok(Self {
            lambda1,
            lambda2,
            lambda3,
            a,
        })
    }

    /// The symmetric family (lambda, lambda, lambda, A = 1) whose product
    /// function pairs N against M particles of the same species.
    pub fn main_family(lambda: f64) -> Result<Self> {
        Self::new(lambda, lambda, lambda, 1.0)
    }

    /// The dual family (lambda, 1/lambda, -1, A = -lambda) mixing a
    /// coupling with its inverse.
    pub fn dual_family(lambda: f64) -> Result<Self> {
        Self::new(lambda, 1.0 / lambda, -1.0, -lambda)
    }
}

/// Single positive coupling constant for the two named product functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    pub lambda: f64,
}

impl CouplingParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidCoupling(format!(
                "lambda = {lambda} must be positive and finite"
            )));
        }
        Ok(Self { lambda })
    }
}
