//! Named residual checks for every identity the library implements, plus
//! deterministic grid sweeps that aggregate them into machine-readable
//! reports.
//!
//! Each check computes a residual that is exactly zero in exact arithmetic,
//! together with the largest additive term entering it. The quotient of the
//! two is the relative residual that is compared against a per-kind
//! tolerance: raw residuals grow with particle number, coupling strength
//! and inverse separation, so only the relative form is meaningful across
//! a parameter grid.

use crate::config::{Configuration, SWEEP_MIN_SEPARATION};
use crate::elliptic;
use crate::error::Result;
use crate::manybody::{self, CouplingFamily, PairTables};
use crate::modulus::ModulusParams;
use crate::oracle::{self, FdScheme};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::{Duration, Instant};

/// Relative tolerance for the two operator identities on the analytic path.
pub const TOL_IDENTITY: f64 = 1e-8;
/// Tolerance for total-momentum cancellation.
pub const TOL_MOMENTUM: f64 = 1e-11;
/// Tolerance for the single-pair heat-flow identity.
pub const TOL_HEAT: f64 = 1e-9;
/// Tolerance for the trigonometric-limit eigenvalue check.
pub const TOL_SUTHERLAND: f64 = 1e-9;
/// Tolerance for V = -phi' checked against a finite difference of phi.
pub const TOL_PHI_SLOPE: f64 = 1e-7;
/// Tolerance for the three-argument phi-product identity.
pub const TOL_PHI_PRODUCT: f64 = 1e-10;
/// Tolerance for f = c1 - d(log theta)/d(beta) checked against a beta
/// finite difference.
pub const TOL_BETA_FLOW: f64 = 1e-8;
/// Tolerance for the two series forms of c2.
pub const TOL_LAMBERT: f64 = 1e-13;
/// Tolerance for c0 = 1/12 - 2 c2.
pub const TOL_CONSTANT_SPLIT: f64 = 1e-13;
/// Tolerance for the cross-form agreement of the identity constants.
pub const TOL_CONSTANT_FORMS: f64 = 1e-12;
/// Tolerance for the gauge-shifted constants against their collapsed forms.
pub const TOL_GAUGE: f64 = 1e-12;
/// Tolerance for the correlation-phase reductions (pure arithmetic).
pub const TOL_PHASES: f64 = 8.0 * f64::EPSILON;
/// Tolerance for the regrouped heat-operator form against the direct one.
pub const TOL_REGROUPING: f64 = 1e-14;
/// Tolerance for engine-vs-oracle agreement on Hamiltonian applications.
pub const TOL_ORACLE_KINETIC: f64 = 1e-6;
/// Tolerance for engine-vs-oracle agreement on beta derivatives.
pub const TOL_ORACLE_BETA: f64 = 1e-8;

/// The named checks. Kinds carrying a coupling family record it in
/// [`IdentityCase::family`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityKind {
    /// Symmetric-family operator identity annihilating the product function.
    Main,
    /// Dual-family operator identity (coupling paired with its inverse).
    Dual,
    /// Total momentum of the product function vanishes.
    Momentum,
    /// V = -phi', with the derivative taken numerically.
    PhiSlope,
    /// phi(x)phi(y) + phi(y)phi(z) + phi(z)phi(x) telescopes to
    /// f(x) + f(y) + f(z) when x + y + z = 0.
    PhiProduct,
    /// f = c1 - d(log theta)/d(beta), with the derivative taken numerically.
    BetaFlow,
    /// The two series forms of c2 agree.
    LambertSum,
    /// c0 = 1/12 - 2 c2.
    ConstantSplit,
    /// Heat-flow identity for a single theta power.
    Heat,
    /// q = 0 eigenvalue check against lambda^2 N (N^2 - 1) / 12.
    Sutherland,
    /// Primary and Lambert forms of the identity constants agree.
    ConstantForms,
    /// Gauge-shifted constants collapse to their simplified displays.
    GaugeShift,
    /// Correlation phases reduce to the two family forms.
    Phases,
    /// Heat-operator regrouping reproduces the direct residual.
    OperatorRegrouping,
    /// Finite-difference oracle agrees with the analytic Hamiltonian.
    OracleKinetic,
    /// Finite-difference oracle agrees with the analytic beta derivative.
    OracleBetaFlow,
}

impl IdentityKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityKind::Main => "main",
            IdentityKind::Dual => "dual",
            IdentityKind::Momentum => "momentum",
            IdentityKind::PhiSlope => "phi-slope",
            IdentityKind::PhiProduct => "phi-product",
            IdentityKind::BetaFlow => "beta-flow",
            IdentityKind::LambertSum => "lambert-sum",
            IdentityKind::ConstantSplit => "constant-split",
            IdentityKind::Heat => "heat",
            IdentityKind::Sutherland => "sutherland",
            IdentityKind::ConstantForms => "constant-forms",
            IdentityKind::GaugeShift => "gauge-shift",
            IdentityKind::Phases => "phases",
            IdentityKind::OperatorRegrouping => "operator-regrouping",
            IdentityKind::OracleKinetic => "oracle-kinetic",
            IdentityKind::OracleBetaFlow => "oracle-beta-flow",
        }
    }

    pub const ALL: [IdentityKind; 16] = [
        IdentityKind::Main,
        IdentityKind::Dual,
        IdentityKind::Momentum,
        IdentityKind::PhiSlope,
        IdentityKind::PhiProduct,
        IdentityKind::BetaFlow,
        IdentityKind::LambertSum,
        IdentityKind::ConstantSplit,
        IdentityKind::Heat,
        IdentityKind::Sutherland,
        IdentityKind::ConstantForms,
        IdentityKind::GaugeShift,
        IdentityKind::Phases,
        IdentityKind::OperatorRegrouping,
        IdentityKind::OracleKinetic,
        IdentityKind::OracleBetaFlow,
    ];
}

impl fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for IdentityKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown identity kind '{s}'"))
    }
}

/// Everything needed to reproduce one check. Optional fields are present
/// only where they apply: `seed`/`config_index` locate a sampled
/// configuration, `argument` is the scalar argument of single-variable
/// checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCase {
    pub kind: IdentityKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub family: Option<CouplingFamily>,
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub q: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub argument: Option<f64>,
}

impl IdentityCase {
    fn new(kind: IdentityKind, n: usize, m: usize, lambda: f64, q: f64) -> Self {
        Self {
            kind,
            family: None,
            n,
            m,
            lambda,
            q,
            seed: None,
            config_index: None,
            argument: None,
        }
    }

    fn with_family(mut self, family: CouplingFamily) -> Self {
        self.family = Some(family);
        self
    }

    fn with_argument(mut self, argument: f64) -> Self {
        self.argument = Some(argument);
        self
    }

    /// Scalar checks that have no particle content.
    fn scalar(kind: IdentityKind, q: f64) -> Self {
        Self::new(kind, 0, 0, 0.0, q)
    }
}

/// Outcome of one check. `relative` is `residual / scale` (or the raw
/// residual when the scale vanishes) and `pass` holds exactly when
/// `relative <= tolerance` and no infrastructure failure occurred; such
/// failures carry their explanation in `reason`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub case: IdentityCase,
    pub residual: f64,
    pub scale: f64,
    pub relative: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    #[serde(skip, default)]
    pub wall_time: Duration,
}

impl ResidualReport {
    fn new(case: IdentityCase, residual: f64, scale: f64, tolerance: f64) -> Self {
        let relative = if scale > 0.0 { residual / scale } else { residual };
        Self {
            case,
            residual,
            scale,
            relative,
            tolerance,
            pass: relative <= tolerance,
            reason: None,
            wall_time: Duration::ZERO,
        }
    }

    fn failed(case: IdentityCase, tolerance: f64, reason: String) -> Self {
        Self {
            case,
            residual: 0.0,
            scale: 0.0,
            relative: 0.0,
            tolerance,
            pass: false,
            reason: Some(reason),
            wall_time: Duration::ZERO,
        }
    }

    fn timed(mut self, start: Instant) -> Self {
        self.wall_time = start.elapsed();
        self
    }
}

/// Residual of the symmetric-family identity on one configuration:
/// the Hamiltonian difference plus 2(N-M) lambda times the beta derivative
/// minus the closed-form constant.
pub fn verify_main(cfg: &Configuration, lambda: f64, p: &ModulusParams) -> Result<ResidualReport> {
    let start = Instant::now();
    let g = CouplingFamily::Main.coupling(lambda)?;
    let tables = PairTables::new(cfg, p)?;
    let h = tables.apply_h(&g, p);
    let flow = 2.0 * (cfg.n() as f64 - cfg.m() as f64) * lambda * tables.dbeta(&g);
    let c = manybody::const_c_nm(cfg.n(), cfg.m(), lambda, p).primary;
    let residual = (h.value + flow - c).abs();
    let scale = h.scale().max(flow.abs()).max(c.abs());
    let case = IdentityCase::new(IdentityKind::Main, cfg.n(), cfg.m(), lambda, p.q());
    Ok(ResidualReport::new(case, residual, scale, TOL_IDENTITY).timed(start))
}

/// Residual of the dual-family identity: here A = -lambda, so the engine's
/// Hamiltonian difference is the sum H_{lambda,N}(x) + lambda H_{1/lambda,M}(y),
/// and the beta coefficient is 2(lambda N + M).
pub fn verify_dual(cfg: &Configuration, lambda: f64, p: &ModulusParams) -> Result<ResidualReport> {
    let start = Instant::now();
    let g = CouplingFamily::Dual.coupling(lambda)?;
    let tables = PairTables::new(cfg, p)?;
    let h = tables.apply_h(&g, p);
    let flow = 2.0 * (lambda * cfg.n() as f64 + cfg.m() as f64) * tables.dbeta(&g);
    let c = manybody::const_c_nm_tilde(cfg.n(), cfg.m(), lambda, p).primary;
    let residual = (h.value + flow - c).abs();
    let scale = h.scale().max(flow.abs()).max(c.abs());
    let case = IdentityCase::new(IdentityKind::Dual, cfg.n(), cfg.m(), lambda, p.q());
    Ok(ResidualReport::new(case, residual, scale, TOL_IDENTITY).timed(start))
}

/// Total-momentum cancellation for either family.
pub fn verify_momentum(
    cfg: &Configuration,
    family: CouplingFamily,
    lambda: f64,
    p: &ModulusParams,
) -> Result<ResidualReport> {
    let start = Instant::now();
    let g = family.coupling(lambda)?;
    let mp = PairTables::new(cfg, p)?.apply_p(&g);
    let residual = (mp.p_x + mp.p_y).abs();
    let scale = mp.scale.max(1.0);
    let case = IdentityCase::new(IdentityKind::Momentum, cfg.n(), cfg.m(), lambda, p.q())
        .with_family(family);
    Ok(ResidualReport::new(case, residual, scale, TOL_MOMENTUM).timed(start))
}

/// The identities rewritten through per-block heat operators
/// 2 lambda N d/d(beta) + H must give the same residual as the direct
/// grouping; the two differ only in how the beta term is multiplied out.
pub fn verify_operator_regrouping(
    cfg: &Configuration,
    family: CouplingFamily,
    lambda: f64,
    p: &ModulusParams,
) -> Result<ResidualReport> {
    let start = Instant::now();
    let g = family.coupling(lambda)?;
    let tables = PairTables::new(cfg, p)?;
    let h = tables.apply_h(&g, p);
    let db = tables.dbeta(&g);
    let (nf, mf) = (cfg.n() as f64, cfg.m() as f64);
    let (flow_direct, flow_regrouped, c) = match family {
        CouplingFamily::Main => (
            2.0 * (nf - mf) * lambda * db,
            2.0 * lambda * nf * db - 2.0 * lambda * mf * db,
            manybody::const_c_nm(cfg.n(), cfg.m(), lambda, p).primary,
        ),
        CouplingFamily::Dual => (
            2.0 * (lambda * nf + mf) * db,
            2.0 * lambda * nf * db + 2.0 * mf * db,
            manybody::const_c_nm_tilde(cfg.n(), cfg.m(), lambda, p).primary,
        ),
    };
    let res_direct = h.value + flow_direct - c;
    let res_regrouped = h.value + flow_regrouped - c;
    let residual = (res_regrouped - res_direct).abs();
    let scale = flow_direct.abs().max(flow_regrouped.abs()).max(1.0);
    let case = IdentityCase::new(
        IdentityKind::OperatorRegrouping,
        cfg.n(),
        cfg.m(),
        lambda,
        p.q(),
    )
    .with_family(family);
    Ok(ResidualReport::new(case, residual, scale, TOL_REGROUPING).timed(start))
}

/// Heat-flow identity for one theta power at relative coordinate x:
/// minus twice the pair's second log-derivative terms, plus the pair
/// potential, plus 4 lambda^2 d(log theta)/d(beta), minus the two-particle
/// constant.
pub fn verify_heat_equation(lambda: f64, x: f64, p: &ModulusParams) -> Result<ResidualReport> {
    let start = Instant::now();
    let phi = elliptic::phi(x, p)?.value;
    let v = elliptic::potential_v(x, p)?.value;
    let dlt = elliptic::dbeta_log_theta(x, p).value;
    let l2 = lambda * lambda;
    let kinetic = -2.0 * (-lambda * v + l2 * phi * phi);
    let pot = 2.0 * lambda * (lambda - 1.0) * v;
    let flow = 4.0 * l2 * dlt;
    let c = 2.0 * l2 * elliptic::const_c0(p).value + 4.0 * l2 * elliptic::const_c1();
    let residual = (kinetic + pot + flow - c).abs();
    let scale = kinetic.abs().max(pot.abs()).max(flow.abs()).max(c.abs());
    let case = IdentityCase::new(IdentityKind::Heat, 2, 0, lambda, p.q()).with_argument(x);
    Ok(ResidualReport::new(case, residual, scale, TOL_HEAT).timed(start))
}

/// At q = 0 and M = 0 the identity degenerates to the eigenvalue equation
/// (H Psi)/Psi = lambda^2 N (N^2 - 1) / 12; this checks both the value and
/// its constancy across sampled configurations.
pub fn verify_sutherland_limit(
    n: usize,
    lambda: f64,
    configs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ResidualReport> {
    let start = Instant::now();
    let p = ModulusParams::from_q(0.0)?;
    let g = CouplingFamily::Main.coupling(lambda)?;
    let nf = n as f64;
    let target = lambda * lambda * nf * (nf * nf - 1.0) / 12.0;
    let mut worst: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut scale = target.abs().max(1.0);
    for _ in 0..configs.max(1) {
        let cfg = Configuration::sample(n, 0, SWEEP_MIN_SEPARATION, rng)?;
        let h = PairTables::new(&cfg, &p)?.apply_h(&g, &p);
        worst = worst.max((h.value - target).abs());
        lo = lo.min(h.value);
        hi = hi.max(h.value);
        scale = scale.max(h.scale());
    }
    let residual = worst.max(hi - lo);
    let case = IdentityCase::new(IdentityKind::Sutherland, n, 0, lambda, 0.0);
    Ok(ResidualReport::new(case, residual, scale, TOL_SUTHERLAND).timed(start))
}

/// V = -phi', with phi' from a five-point stencil plus one Richardson level.
pub fn verify_phi_slope(x: f64, p: &ModulusParams) -> Result<ResidualReport> {
    let start = Instant::now();
    let v = elliptic::potential_v(x, p)?.value;
    let scheme = FdScheme::default();
    let mut eval = |delta: f64| Ok(elliptic::phi(x + delta, p)?.value);
    let (fd_slope, _) = oracle::stencil_d1_d2(&mut eval, &scheme)?;
    let residual = (fd_slope + v).abs();
    let scale = v.abs().max(fd_slope.abs());
    let case = IdentityCase::scalar(IdentityKind::PhiSlope, p.q()).with_argument(x);
    Ok(ResidualReport::new(case, residual, scale, TOL_PHI_SLOPE).timed(start))
}

/// The pair-product telescoping identity at x + y + z = 0:
/// phi(x)phi(y) + phi(y)phi(z) + phi(z)phi(x) = f(x) + f(y) + f(z).
pub fn verify_phi_product(x: f64, y: f64, p: &ModulusParams) -> Result<ResidualReport> {
    let start = Instant::now();
    let z = -x - y;
    let (px, py, pz) = (
        elliptic::phi(x, p)?.value,
        elliptic::phi(y, p)?.value,
        elliptic::phi(z, p)?.value,
    );
    let (fx, fy, fz) = (
        elliptic::f_func(x, p)?.value,
        elliptic::f_func(y, p)?.value,
        elliptic::f_func(z, p)?.value,
    );
    let residual = (px * py + py * pz + pz * px - (fx + fy + fz)).abs();
    let scale = [px * py, py * pz, pz * px, fx, fy, fz]
        .iter()
        .fold(0.0f64, |acc, t| acc.max(t.abs()));
    let case = IdentityCase::scalar(IdentityKind::PhiProduct, p.q()).with_argument(x);
    Ok(ResidualReport::new(case, residual, scale, TOL_PHI_PRODUCT).timed(start))
}

/// f(x) = c1 - d(log theta(x))/d(beta), with the beta derivative taken by
/// central differences so it does not share code with the series route.
pub fn verify_beta_flow(x: f64, p: &ModulusParams) -> Result<ResidualReport> {
    let start = Instant::now();
    let f = elliptic::f_func(x, p)?.value;
    let beta = p.beta();
    let scheme = FdScheme::default();
    let reach = scheme.stencil_halfwidth();
    let beta_min = -2.0 * crate::modulus::Q_CAP.ln();
    if !beta.is_finite() || beta - reach <= beta_min {
        return Err(crate::error::Error::BetaStepOutOfRange {
            beta,
            step: scheme.base_step,
        });
    }
    let tail = p.tail_eps();
    let mut eval = |delta: f64| -> Result<f64> {
        let pd = ModulusParams::from_beta_with_tail(beta + delta, tail)?;
        Ok(elliptic::theta(x, &pd).value.abs().ln())
    };
    let (fd_dlt, _) = oracle::stencil_d1_d2(&mut eval, &scheme)?;
    let residual = (f - (elliptic::const_c1() - fd_dlt)).abs();
    let scale = f.abs().max(fd_dlt.abs()).max(elliptic::const_c1());
    let case = IdentityCase::scalar(IdentityKind::BetaFlow, p.q()).with_argument(x);
    Ok(ResidualReport::new(case, residual, scale, TOL_BETA_FLOW).timed(start))
}

/// The two series routes to c2 agree.
pub fn verify_lambert_sum(p: &ModulusParams) -> ResidualReport {
    let start = Instant::now();
    let a = elliptic::const_c2(p).value;
    let b = elliptic::const_c2_dual(p).value;
    let residual = (a - b).abs();
    let scale = a.abs().max(b.abs()).max(1.0 / 12.0);
    let case = IdentityCase::scalar(IdentityKind::LambertSum, p.q());
    ResidualReport::new(case, residual, scale, TOL_LAMBERT).timed(start)
}

/// c0 = 1/12 - 2 c2.
pub fn verify_constant_split(p: &ModulusParams) -> ResidualReport {
    let start = Instant::now();
    let c0 = elliptic::const_c0(p).value;
    let c2 = elliptic::const_c2(p).value;
    let residual = (c0 - (1.0 / 12.0 - 2.0 * c2)).abs();
    let scale = c0.abs().max(2.0 * c2.abs()).max(1.0 / 12.0);
    let case = IdentityCase::scalar(IdentityKind::ConstantSplit, p.q());
    ResidualReport::new(case, residual, scale, TOL_CONSTANT_SPLIT).timed(start)
}

/// All scalar-layer checks over a fixed argument grid: the slope and
/// beta-flow relations at every grid point, the product identity on
/// derived zero-sum triples, and the two constant identities once. The
/// beta-flow check needs finite beta and is skipped at q = 0.
pub fn verify_scalar_relations(p: &ModulusParams) -> Result<Vec<ResidualReport>> {
    let mut reports = Vec::new();
    let args = scalar_argument_grid();
    for &x in &args {
        reports.push(verify_phi_slope(x, p)?);
        if p.q() > 0.0 {
            reports.push(verify_beta_flow(x, p)?);
        }
    }
    for (i, &x) in args.iter().enumerate() {
        let y = args[(i + 13) % args.len()] * 0.81;
        if phi_triple_is_pole_safe(x, y) {
            reports.push(verify_phi_product(x, y, p)?);
        }
    }
    reports.push(verify_lambert_sum(p));
    reports.push(verify_constant_split(p));
    Ok(reports)
}

/// 50 arguments spread over one period, clear of the theta zeros at 0 and
/// 2 pi.
fn scalar_argument_grid() -> Vec<f64> {
    let (lo, hi) = (0.12, 6.16);
    (0..50)
        .map(|i| lo + (hi - lo) * i as f64 / 49.0)
        .collect()
}

fn phi_triple_is_pole_safe(x: f64, y: f64) -> bool {
    let z = -x - y;
    [x, y, z].iter().all(|&a| {
        let d = (a / (2.0 * std::f64::consts::PI)).round();
        (a - d * 2.0 * std::f64::consts::PI).abs() > 0.1
    })
}

/// Primary vs Lambert evaluation of both identity constants.
pub fn verify_constant_forms(n: usize, m: usize, lambda: f64, p: &ModulusParams) -> ResidualReport {
    let start = Instant::now();
    let c = manybody::const_c_nm(n, m, lambda, p);
    let ct = manybody::const_c_nm_tilde(n, m, lambda, p);
    let residual = (c.primary - c.lambert)
        .abs()
        .max((ct.primary - ct.lambert).abs());
    let scale = [c.primary, c.lambert, ct.primary, ct.lambert]
        .iter()
        .fold(1.0f64, |acc, t| acc.max(t.abs()));
    let case = IdentityCase::new(IdentityKind::ConstantForms, n, m, lambda, p.q());
    ResidualReport::new(case, residual, scale, TOL_CONSTANT_FORMS).timed(start)
}

/// Gauge-shifted constants at b0 = c0, b1 = c1 against the collapsed
/// closed forms.
pub fn verify_gauge_shift(n: usize, m: usize, lambda: f64, p: &ModulusParams) -> ResidualReport {
    let start = Instant::now();
    let c0 = elliptic::const_c0(p).value;
    let c1 = elliptic::const_c1();
    let shifted = manybody::gauge_transform_constants(n, m, lambda, c0, c1, p);
    let simple = manybody::simplified_constants(n, m, lambda, p);
    let residual = (shifted.c_nm - simple.c_nm)
        .abs()
        .max((shifted.c_nm_tilde - simple.c_nm_tilde).abs());
    let scale = [simple.c_nm, simple.c_nm_tilde, shifted.c_nm, shifted.c_nm_tilde]
        .iter()
        .fold(1.0f64, |acc, t| acc.max(t.abs()));
    let case = IdentityCase::new(IdentityKind::GaugeShift, n, m, lambda, p.q());
    ResidualReport::new(case, residual, scale, TOL_GAUGE).timed(start)
}

/// Correlation phases against the two family reductions.
pub fn verify_phases(n: usize, m: usize, lambda: f64) -> ResidualReport {
    let start = Instant::now();
    let (nf, mf) = (n as f64, m as f64);
    let root = lambda.sqrt();

    let (p1, p2) = manybody::correlation_phases(n, m, root, root);
    let symmetric = 0.5 * lambda * (nf - mf);
    let mut residual = (p1 - symmetric).abs().max((p2 + symmetric).abs());
    let mut scale = symmetric.abs().max(1.0);

    let (p1, p2) = manybody::correlation_phases(n, m, root, -1.0 / root);
    let e1 = 0.5 * (lambda * nf + mf);
    let e2 = 0.5 * (nf + mf / lambda);
    residual = residual.max((p1 - e1).abs()).max((p2 - e2).abs());
    scale = scale.max(e1.abs()).max(e2.abs());

    let case = IdentityCase::new(IdentityKind::Phases, n, m, lambda, 0.0);
    ResidualReport::new(case, residual, scale, TOL_PHASES).timed(start)
}

/// Engine vs finite-difference oracle for the Hamiltonian application.
pub fn verify_oracle_kinetic(
    cfg: &Configuration,
    family: CouplingFamily,
    lambda: f64,
    p: &ModulusParams,
    scheme: &FdScheme,
) -> Result<ResidualReport> {
    let start = Instant::now();
    let g = family.coupling(lambda)?;
    let engine = PairTables::new(cfg, p)?.apply_h(&g, p);
    let fd = oracle::fd_apply_h(cfg, &g, p, scheme)?;
    let residual = (engine.value - fd).abs();
    let scale = oracle::comparison_scale(cfg, &g, p).max(engine.scale());
    let case = IdentityCase::new(IdentityKind::OracleKinetic, cfg.n(), cfg.m(), lambda, p.q())
        .with_family(family);
    Ok(ResidualReport::new(case, residual, scale, TOL_ORACLE_KINETIC).timed(start))
}

/// Engine vs finite-difference oracle for the beta derivative.
pub fn verify_oracle_beta_flow(
    cfg: &Configuration,
    family: CouplingFamily,
    lambda: f64,
    p: &ModulusParams,
    scheme: &FdScheme,
) -> Result<ResidualReport> {
    let start = Instant::now();
    let g = family.coupling(lambda)?;
    let series = PairTables::new(cfg, p)?.dbeta(&g);
    let fd = oracle::fd_dbeta(cfg, &g, p, scheme)?;
    let residual = (series - fd).abs();
    let scale = series.abs().max(fd.abs()).max(1.0);
    let case = IdentityCase::new(IdentityKind::OracleBetaFlow, cfg.n(), cfg.m(), lambda, p.q())
        .with_family(family);
    Ok(ResidualReport::new(case, residual, scale, TOL_ORACLE_BETA).timed(start))
}

/// Parameter grid for [`sweep`]. Cells are either every (N, M) with
/// 1 <= N <= n_max and 0 <= M <= N, or the explicit list in `cells`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n_max: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cells: Option<Vec<(usize, usize)>>,
    pub lambdas: Vec<f64>,
    pub qs: Vec<f64>,
    pub configs_per_cell: usize,
    pub seed: u64,
    pub min_separation: f64,
    pub with_oracle: bool,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            n_max: 6,
            cells: None,
            lambdas: vec![0.5, 1.0, 1.5, 2.0],
            qs: vec![0.0, 0.25, 0.5, 0.75],
            configs_per_cell: 20,
            seed: 42,
            min_separation: SWEEP_MIN_SEPARATION,
            with_oracle: false,
        }
    }
}

struct CellSpec {
    index: u64,
    n: usize,
    m: usize,
    lambda: f64,
    q: f64,
}

/// Runs every applicable check over the grid and aggregates, per cell and
/// kind, the worst relative residual across the sampled configurations
/// (the retained report's `config_index` points at the offending sample).
/// Scalar-layer checks run once per q value. Cells evaluate in parallel;
/// the report order is the deterministic cell order, so identical grids
/// and seeds give identical output.
pub fn sweep(grid: &SweepGrid) -> Vec<ResidualReport> {
    let mut cells = Vec::new();
    let mut index = 0u64;
    let pairs: Vec<(usize, usize)> = match &grid.cells {
        Some(list) => list.clone(),
        None => {
            let mut v = Vec::new();
            for n in 1..=grid.n_max {
                for m in 0..=n {
                    v.push((n, m));
                }
            }
            v
        }
    };
    for &(n, m) in &pairs {
        for &lambda in &grid.lambdas {
            for &q in &grid.qs {
                cells.push(CellSpec {
                    index,
                    n,
                    m,
                    lambda,
                    q,
                });
                index += 1;
            }
        }
    }
    if cells.is_empty() {
        return Vec::new();
    }

    let mut reports = Vec::new();
    for &q in &grid.qs {
        match ModulusParams::from_q(q) {
            Ok(p) => match verify_scalar_relations(&p) {
                Ok(mut r) => reports.append(&mut r),
                Err(e) => reports.push(ResidualReport::failed(
                    IdentityCase::scalar(IdentityKind::PhiSlope, q),
                    TOL_PHI_SLOPE,
                    e.to_string(),
                )),
            },
            Err(e) => reports.push(ResidualReport::failed(
                IdentityCase::scalar(IdentityKind::PhiSlope, q),
                TOL_PHI_SLOPE,
                e.to_string(),
            )),
        }
    }

    let per_cell: Vec<Vec<ResidualReport>> =
        cells.par_iter().map(|cell| run_cell(grid, cell)).collect();
    for mut cell_reports in per_cell {
        reports.append(&mut cell_reports);
    }
    reports
}

fn keep_worst(slot: &mut Option<ResidualReport>, candidate: ResidualReport) {
    let replace = match slot.as_ref() {
        None => true,
        Some(held) if held.reason.is_some() => false,
        Some(_) if candidate.reason.is_some() => true,
        Some(held) => candidate.relative > held.relative,
    };
    if replace {
        *slot = Some(candidate);
    }
}

fn run_cell(grid: &SweepGrid, cell: &CellSpec) -> Vec<ResidualReport> {
    let mut out = Vec::new();
    let p = match ModulusParams::from_q(cell.q) {
        Ok(p) => p,
        Err(e) => {
            out.push(ResidualReport::failed(
                IdentityCase::new(IdentityKind::Main, cell.n, cell.m, cell.lambda, cell.q),
                TOL_IDENTITY,
                e.to_string(),
            ));
            return out;
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    rng.set_stream(cell.index);
    let scheme = FdScheme::default();

    let mut worst_main: Option<ResidualReport> = None;
    let mut worst_dual: Option<ResidualReport> = None;
    let mut worst_momentum = [None, None];
    let mut worst_regroup = [None, None];
    let mut worst_oracle_h = [None, None];
    let mut worst_oracle_b = [None, None];

    for config_index in 0..grid.configs_per_cell {
        let cfg = match Configuration::sample(cell.n, cell.m, grid.min_separation, &mut rng) {
            Ok(c) => c,
            Err(e) => {
                keep_worst(
                    &mut worst_main,
                    ResidualReport::failed(
                        IdentityCase::new(
                            IdentityKind::Main,
                            cell.n,
                            cell.m,
                            cell.lambda,
                            cell.q,
                        ),
                        TOL_IDENTITY,
                        e.to_string(),
                    ),
                );
                continue;
            }
        };
        let stamp = |mut r: ResidualReport| {
            r.case.seed = Some(grid.seed);
            r.case.config_index = Some(config_index);
            r
        };
        let record = |slot: &mut Option<ResidualReport>,
                      result: Result<ResidualReport>,
                      kind: IdentityKind,
                      family: Option<CouplingFamily>,
                      tolerance: f64| {
            match result {
                Ok(r) => keep_worst(slot, stamp(r)),
                Err(e) => {
                    let mut case =
                        IdentityCase::new(kind, cell.n, cell.m, cell.lambda, cell.q);
                    case.family = family;
                    case.seed = Some(grid.seed);
                    case.config_index = Some(config_index);
                    keep_worst(
                        slot,
                        ResidualReport::failed(case, tolerance, e.to_string()),
                    );
                }
            }
        };

        record(
            &mut worst_main,
            verify_main(&cfg, cell.lambda, &p),
            IdentityKind::Main,
            None,
            TOL_IDENTITY,
        );
        record(
            &mut worst_dual,
            verify_dual(&cfg, cell.lambda, &p),
            IdentityKind::Dual,
            None,
            TOL_IDENTITY,
        );
        for (slot, family) in worst_momentum
            .iter_mut()
            .zip([CouplingFamily::Main, CouplingFamily::Dual])
        {
            record(
                slot,
                verify_momentum(&cfg, family, cell.lambda, &p),
                IdentityKind::Momentum,
                Some(family),
                TOL_MOMENTUM,
            );
        }
        for (slot, family) in worst_regroup
            .iter_mut()
            .zip([CouplingFamily::Main, CouplingFamily::Dual])
        {
            record(
                slot,
                verify_operator_regrouping(&cfg, family, cell.lambda, &p),
                IdentityKind::OperatorRegrouping,
                Some(family),
                TOL_REGROUPING,
            );
        }
        if grid.with_oracle {
            for (slot, family) in worst_oracle_h
                .iter_mut()
                .zip([CouplingFamily::Main, CouplingFamily::Dual])
            {
                record(
                    slot,
                    verify_oracle_kinetic(&cfg, family, cell.lambda, &p, &scheme),
                    IdentityKind::OracleKinetic,
                    Some(family),
                    TOL_ORACLE_KINETIC,
                );
            }
            if cell.q > 0.0 {
                for (slot, family) in worst_oracle_b
                    .iter_mut()
                    .zip([CouplingFamily::Main, CouplingFamily::Dual])
                {
                    record(
                        slot,
                        verify_oracle_beta_flow(&cfg, family, cell.lambda, &p, &scheme),
                        IdentityKind::OracleBetaFlow,
                        Some(family),
                        TOL_ORACLE_BETA,
                    );
                }
            }
        }
    }

    out.extend(worst_main);
    out.extend(worst_dual);
    for slot in worst_momentum {
        out.extend(slot);
    }
    for slot in worst_regroup {
        out.extend(slot);
    }
    for slot in worst_oracle_h {
        out.extend(slot);
    }
    for slot in worst_oracle_b {
        out.extend(slot);
    }

    let mut stamped = |mut r: ResidualReport| {
        r.case.seed = Some(grid.seed);
        out.push(r);
    };
    stamped(verify_constant_forms(cell.n, cell.m, cell.lambda, &p));
    stamped(verify_gauge_shift(cell.n, cell.m, cell.lambda, &p));
    stamped(verify_phases(cell.n, cell.m, cell.lambda));
    if cell.q == 0.0 && cell.m == 0 {
        match verify_sutherland_limit(cell.n, cell.lambda, grid.configs_per_cell, &mut rng) {
            Ok(mut r) => {
                r.case.seed = Some(grid.seed);
                out.push(r);
            }
            Err(e) => out.push(ResidualReport::failed(
                IdentityCase::new(IdentityKind::Sutherland, cell.n, 0, cell.lambda, 0.0),
                TOL_SUTHERLAND,
                e.to_string(),
            )),
        }
    }
    if cell.n == 2 && cell.m == 0 {
        for x in [0.9, 1.7, 2.6] {
            match verify_heat_equation(cell.lambda, x, &p) {
                Ok(r) => out.push(r),
                Err(e) => out.push(ResidualReport::failed(
                    IdentityCase::new(IdentityKind::Heat, 2, 0, cell.lambda, cell.q)
                        .with_argument(x),
                    TOL_HEAT,
                    e.to_string(),
                )),
            }
        }
    }
    out
}

/// The fixed self-check suite: scalar relations across moduli, constant and
/// phase consistency over particle-number grids, a small identity sweep,
/// and engine-vs-oracle concordance on sampled cases.
pub fn selftest() -> Vec<ResidualReport> {
    let mut reports = Vec::new();

    for i in 1..=9 {
        let q = i as f64 / 10.0;
        let p = ModulusParams::from_q(q).expect("q below cap");
        match verify_scalar_relations(&p) {
            Ok(mut r) => reports.append(&mut r),
            Err(e) => reports.push(ResidualReport::failed(
                IdentityCase::scalar(IdentityKind::PhiSlope, q),
                TOL_PHI_SLOPE,
                e.to_string(),
            )),
        }
    }

    for &q in &[0.0, 0.3, 0.7] {
        let p = ModulusParams::from_q(q).expect("q below cap");
        for n in 0..=8 {
            for m in 0..=8 {
                for &lambda in &[0.5, 2.0] {
                    reports.push(verify_constant_forms(n, m, lambda, &p));
                }
            }
        }
        for n in 0..=5 {
            for m in 0..=5 {
                reports.push(verify_gauge_shift(n, m, 1.5, &p));
            }
        }
    }
    for n in 0..=10 {
        for m in 0..=10 {
            for &lambda in &[0.5, 1.0, 2.0, 3.0] {
                reports.push(verify_phases(n, m, lambda));
            }
        }
    }

    let grid = SweepGrid {
        cells: Some(vec![(2, 1), (3, 2)]),
        lambdas: vec![1.0, 1.5],
        qs: vec![0.0, 0.5],
        configs_per_cell: 5,
        ..SweepGrid::default()
    };
    reports.extend(sweep(&grid));

    let p = ModulusParams::from_q(0.45).expect("q below cap");
    let scheme = FdScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..10 {
        let family = if trial % 2 == 0 {
            CouplingFamily::Main
        } else {
            CouplingFamily::Dual
        };
        let outcome = Configuration::sample(3, 2, 0.2, &mut rng)
            .and_then(|cfg| {
                let h = verify_oracle_kinetic(&cfg, family, 1.5, &p, &scheme)?;
                let b = verify_oracle_beta_flow(&cfg, family, 1.5, &p, &scheme)?;
                Ok([h, b])
            });
        match outcome {
            Ok(pair) => reports.extend(pair),
            Err(e) => reports.push(ResidualReport::failed(
                IdentityCase::new(IdentityKind::OracleKinetic, 3, 2, 1.5, 0.45)
                    .with_family(family),
                TOL_ORACLE_KINETIC,
                e.to_string(),
            )),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=4 {
        for &lambda in &[1.0, 2.0] {
            match verify_sutherland_limit(n, lambda, 10, &mut rng) {
                Ok(r) => reports.push(r),
                Err(e) => reports.push(ResidualReport::failed(
                    IdentityCase::new(IdentityKind::Sutherland, n, 0, lambda, 0.0),
                    TOL_SUTHERLAND,
                    e.to_string(),
                )),
            }
        }
    }
    for &q in &[0.3, 0.6] {
        let p = ModulusParams::from_q(q).expect("q below cap");
        for &lambda in &[1.0, 2.0] {
            for i in 0..5 {
                let x = 0.5 + 1.1 * i as f64;
                match verify_heat_equation(lambda, x, &p) {
                    Ok(r) => reports.push(r),
                    Err(e) => reports.push(ResidualReport::failed(
                        IdentityCase::new(IdentityKind::Heat, 2, 0, lambda, q)
                            .with_argument(x),
                        TOL_HEAT,
                        e.to_string(),
                    )),
                }
            }
        }
    }

    reports
}
