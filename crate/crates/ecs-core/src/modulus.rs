use crate::error::{Error, Result};
use serde::Serialize;

/// Default relative tail tolerance for truncated q-series.
pub const DEFAULT_TAIL_EPS: f64 = 1e-16;

/// Nome cap. Above this the infinite products underflow double precision
/// near the zeros of theta and no meaningful digits survive.
pub const Q_CAP: f64 = 0.95;

/// Pole guard on |theta|. Evaluations of phi, V and f closer to a zero of
/// theta than this refuse to return a value instead of degrading silently.
pub const POLE_EPS: f64 = 1e-12;

/// Fraction of the analyticity strip half-width `beta` that complex
/// arguments may occupy. Beyond it the defining products stop converging
/// at any useful rate.
pub const STRIP_FRACTION: f64 = 0.9;

/// Inverse temperature `beta` and nome `q = exp(-beta/2)` together with the
/// truncation order used by every series evaluation built on top of it.
///
/// The two parametrisations are kept in exact correspondence; `q = 0`
/// (`beta = +inf`) is a valid degenerate point where all series collapse to
/// their trigonometric limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusParams {
    beta: f64,
    q: f64,
    n_max: usize,
    tail_eps: f64,
}

impl ModulusParams {
    /// Builds parameters from the inverse temperature. `beta = +inf` is
    /// accepted and maps to `q = 0`.
    pub fn from_beta(beta: f64) -> Result<Self> {
        Self::from_beta_with_tail(beta, DEFAULT_TAIL_EPS)
    }

    /// Builds parameters from the nome directly, `0 <= q < Q_CAP`.
    pub fn from_q(q: f64) -> Result<Self> {
        Self::from_q_with_tail(q, DEFAULT_TAIL_EPS)
    }

    /// `from_beta` with an explicit tail tolerance.
    pub fn from_beta_with_tail(beta: f64, tail_eps: f64) -> Result<Self> {
        if beta.is_nan() || beta <= 0.0 {
            return Err(Error::InvalidBeta { beta });
        }
        let q = (-beta / 2.0).exp();
        Self::build(beta, q, tail_eps)
    }

    /// `from_q` with an explicit tail tolerance.
    pub fn from_q_with_tail(q: f64, tail_eps: f64) -> Result<Self> {
        if !q.is_finite() || q < 0.0 {
            return Err(Error::NomeOutOfRange { q, cap: Q_CAP });
        }
        let beta = if q == 0.0 { f64::INFINITY } else { -2.0 * q.ln() };
        Self::build(beta, q, tail_eps)
    }

    fn build(beta: f64, q: f64, tail_eps: f64) -> Result<Self> {
        if !(0.0..Q_CAP).contains(&q) {
            return Err(Error::NomeOutOfRange { q, cap: Q_CAP });
        }
        if !(tail_eps > 1e-300 && tail_eps < 1e-1) {
            return Err(Error::InvalidTailEps { tail_eps });
        }
        let n_max = n_max_for(q, tail_eps);
        Ok(Self {
            beta,
            q,
            n_max,
            tail_eps,
        })
    }

    /// Returns a copy with the truncation order recomputed for `tail_eps`.
    pub fn with_tail_eps(&self, tail_eps: f64) -> Result<Self> {
        Self::build(self.beta, self.q, tail_eps)
    }

    /// Returns a copy truncating at `n_max` terms instead of the order
    /// implied by `tail_eps`. Used by refinement self-checks.
    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self {
            n_max: n_max.max(1),
            ..*self
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Square of the nome; the natural expansion variable of every series.
    pub fn q2(&self) -> f64 {
        self.q * self.q
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn tail_eps(&self) -> f64 {
        self.tail_eps
    }

    /// Half-width of the strip in which complex arguments are accepted.
    pub fn strip_limit(&self) -> f64 {
        STRIP_FRACTION * self.beta
    }

    /// Geometric tail `sum_{n > n_max} q^(2n) = q^(2(n_max+1)) / (1 - q^2)`,
    /// the building block of every reported tail bound.
    pub fn geometric_tail(&self) -> f64 {
        if self.q == 0.0 {
            return 0.0;
        }
        let q2 = self.q2();
        q2.powi(self.n_max as i32 + 1) / (1.0 - q2)
    }
}

/// Smallest truncation order `n` with `q^(2n) / (1 - q^2) < tail_eps`.
fn n_max_for(q: f64, tail_eps: f64) -> usize {
    if q == 0.0 {
        return 1;
    }
    let q2 = q * q;
    let bound = tail_eps * (1.0 - q2);
    let mut n = ((bound.ln() / q2.ln()).floor() as i64 + 1).max(1) as usize;
    while q2.powi(n as i32) >= bound {
        n += 1;
    }
    n
}

/// A truncated series evaluation paired with a rigorous bound on the
/// magnitude of everything that was cut off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue<T = f64> {
    pub value: T,
    pub tail_bound: f64,
}

impl<T> SeriesValue<T> {
    pub fn new(value: T, tail_bound: f64) -> Self {
        Self { value, tail_bound }
    }

    /// An exactly representable value, e.g. from a closed trigonometric form.
    pub fn exact(value: T) -> Self {
        Self {
            value,
            tail_bound: 0.0,
        }
    }
}
