use thiserror::Error;

/// Errors produced by series evaluation, configuration validation and the
/// finite-difference oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inverse temperature must be positive and finite.
    #[error("invalid inverse temperature beta = {beta}; expected 0 < beta (or +inf for q = 0)")]
    InvalidBeta { beta: f64 },

    /// The nome must stay strictly below the cap where double-precision
    /// products lose all significance.
    #[error("nome q = {q} is not in [0, {cap})")]
    NomeOutOfRange { q: f64, cap: f64 },

    /// Tail tolerance must be a positive number well above underflow.
    #[error("invalid tail tolerance {tail_eps}; expected 1e-300 < tail_eps < 1e-1")]
    InvalidTailEps { tail_eps: f64 },

    /// Complex arguments are only supported inside the analyticity strip.
    #[error("argument with Im z = {im} lies outside the strip |Im z| <= {limit}")]
    OutsideStrip { im: f64, limit: f64 },

    /// Evaluation too close to a zero of theta, where phi, V and f blow up.
    #[error("argument {arg} is within the pole guard: |theta| = {theta_abs:e} <= {pole_eps:e}")]
    NearPole {
        arg: f64,
        theta_abs: f64,
        pole_eps: f64,
    },

    /// A coordinate configuration violated a structural requirement.
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// Rejection sampling could not find a well-separated configuration.
    #[error("failed to sample a configuration with separation >= {min_separation} after {attempts} attempts")]
    SamplingFailed {
        min_separation: f64,
        attempts: usize,
    },

    /// Coupling parameters violated a positivity requirement.
    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    /// A finite-difference stencil would step across a pole of the integrand.
    #[error("stencil of half-width {stencil_halfwidth} collides with the pole guard at separation {min_separation}")]
    StencilCollision {
        stencil_halfwidth: f64,
        min_separation: f64,
    },

    /// A beta-direction stencil would leave the valid modulus range.
    #[error("beta step {step} leaves the valid range at beta = {beta}")]
    BetaStepOutOfRange { beta: f64, step: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
