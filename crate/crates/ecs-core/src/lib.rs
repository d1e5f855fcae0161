//! Numerical engine for a family of elliptic Calogero-Sutherland operator
//! identities.
//!
//! The crate is organised in layers:
//!
//! - [`modulus`]: the nome/inverse-temperature parameter pair plus certified
//!   series truncation ([`ModulusParams`], [`SeriesValue`]);
//! - [`elliptic`]: scalar special functions (theta, phi, V, f) and the
//!   q-series constants tying them together;
//! - [`manybody`]: coordinate configurations and logarithmic-form
//!   applications of the Hamiltonian, momentum and beta-flow operators to
//!   product wavefunctions;
//! - [`oracle`]: an independent finite-difference route to the same operator
//!   applications;
//! - [`verifier`]: residual checks for every identity, grid sweeps and
//!   machine-readable reports.
//!
//! All verification happens on scalars of the form (operator applied to G)
//! divided by G, so no wavefunction is ever evaluated directly and the whole
//! pipeline stays well-conditioned in double precision.

pub mod config;
pub mod elliptic;
pub mod error;
pub mod manybody;
pub mod modulus;
pub mod oracle;
pub mod verifier;

pub use config::{Configuration, CouplingParams, GeneralCoupling};
pub use error::{Error, Result};
pub use manybody::{
    check_conditions, const_c_nm, const_c_nm_tilde, correlation_phases, ConditionReport,
    ConstantForms, CouplingFamily, LogFormResult, MomentumPair, PairTables,
};
pub use modulus::{ModulusParams, SeriesValue, DEFAULT_TAIL_EPS, POLE_EPS, Q_CAP};
pub use oracle::{FdOrder, FdScheme};
pub use verifier::{selftest, sweep, IdentityCase, IdentityKind, ResidualReport, SweepGrid};
