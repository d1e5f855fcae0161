//! Logarithmic-form applications of the Hamiltonian, momentum and
//! beta-derivative operators to the three-block product function
//!
//! ```text
//! G(x; y) = prod_{j<k} theta(x_k - x_j)^lambda1
//!         * prod_{J<K} theta(y_J - y_K)^lambda2
//!         / prod_{j,K} theta(x_j - y_K)^lambda3 ,
//! ```
//!
//! together with the closed-form constants entering the operator identities
//! G satisfies. Nothing here ever evaluates G itself: every operator
//! application is expressed through phi, V, f and d(log theta)/d(beta) of
//! pairwise coordinate differences, so all arithmetic stays on scalars of
//! moderate size.

use crate::config::{Configuration, CouplingParams, GeneralCoupling};
use crate::elliptic::{self, pair_values, PairValues};
use crate::error::Result;
use crate::modulus::ModulusParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Relative tolerance for the exact parameter constraints checked by
/// [`check_conditions`].
const CONDITION_TOL: f64 = 1e-12;

/// Pairwise tables of log|theta|, sign(theta), phi, V, f and
/// d(log theta)/d(beta) over all coordinate differences of one
/// configuration. Building the tables costs one series kernel pass per
/// unordered pair; every operator application afterwards is cheap
/// polynomial accumulation.
pub struct PairTables {
    n: usize,
    k: usize,
    log_abs: Vec<f64>,
    negative: Vec<bool>,
    phi: Vec<f64>,
    v: Vec<f64>,
    f: Vec<f64>,
    dlt: Vec<f64>,
}

impl PairTables {
    pub fn new(cfg: &Configuration, p: &ModulusParams) -> Result<Self> {
        let n = cfg.n();
        let k = n + cfg.m();
        let z: Vec<f64> = cfg.x().iter().chain(cfg.y().iter()).copied().collect();
        let c0 = elliptic::const_c0(p).value;
        let mut t = Self {
            n,
            k,
            log_abs: vec![0.0; k * k],
            negative: vec![false; k * k],
            phi: vec![0.0; k * k],
            v: vec![0.0; k * k],
            f: vec![0.0; k * k],
            dlt: vec![0.0; k * k],
        };
        for i in 0..k {
            for j in 0..i {
                let pv: PairValues = pair_values(z[i] - z[j], p, c0)?;
                let (ij, ji) = (i * k + j, j * k + i);
                t.log_abs[ij] = pv.log_abs_theta;
                t.log_abs[ji] = pv.log_abs_theta;
                t.negative[ij] = pv.theta_negative;
                t.negative[ji] = !pv.theta_negative;
                t.phi[ij] = pv.phi;
                t.phi[ji] = -pv.phi;
                t.v[ij] = pv.v;
                t.v[ji] = pv.v;
                t.f[ij] = pv.f;
                t.f[ji] = pv.f;
                t.dlt[ij] = pv.dlt;
                t.dlt[ji] = pv.dlt;
            }
        }
        Ok(t)
    }

    fn m(&self) -> usize {
        self.k - self.n
    }

    /// phi(z_i - z_j) over the concatenated coordinate list.
    fn phi_at(&self, i: usize, j: usize) -> f64 {
        self.phi[i * self.k + j]
    }

    fn v_at(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.k + j]
    }

    fn f_at(&self, i: usize, j: usize) -> f64 {
        self.f[i * self.k + j]
    }

    fn dlt_at(&self, i: usize, j: usize) -> f64 {
        self.dlt[i * self.k + j]
    }

    /// Gradient of log G along x_j: lambda1 sum_{k != j} phi(x_j - x_k)
    /// minus lambda3 sum_K phi(x_j - y_K).
    fn grad_x(&self, g: &GeneralCoupling, j: usize) -> f64 {
        let own: f64 = (0..self.n)
            .filter(|&k| k != j)
            .map(|k| self.phi_at(j, k))
            .sum();
        let cross: f64 = (self.n..self.k).map(|kk| self.phi_at(j, kk)).sum();
        g.lambda1 * own - g.lambda3 * cross
    }

    /// Gradient of log G along y_J (J counted from 0).
    fn grad_y(&self, g: &GeneralCoupling, jj: usize) -> f64 {
        let row = self.n + jj;
        let own: f64 = (self.n..self.k)
            .filter(|&kk| kk != row)
            .map(|kk| self.phi_at(row, kk))
            .sum();
        let cross: f64 = (0..self.n).map(|k| self.phi_at(row, k)).sum();
        g.lambda2 * own - g.lambda3 * cross
    }

    /// Sums of f over the three pair blocks: x-x, y-y and x-y.
    pub fn f_sums(&self) -> (f64, f64, f64) {
        let mut fx = 0.0;
        for j in 0..self.n {
            for k in 0..j {
                fx += self.f_at(j, k);
            }
        }
        let mut fy = 0.0;
        for jj in self.n..self.k {
            for kk in self.n..jj {
                fy += self.f_at(jj, kk);
            }
        }
        let mut fxy = 0.0;
        for j in 0..self.n {
            for kk in self.n..self.k {
                fxy += self.f_at(j, kk);
            }
        }
        (fx, fy, fxy)
    }

    /// Applies (H_{lambda1,N}(x) - A H_{lambda2,M}(y)) to G and divides by
    /// G, returning the grouped decomposition together with the ungrouped
    /// per-particle assembly of the same number.
    pub fn apply_h(&self, g: &GeneralCoupling, p: &ModulusParams) -> LogFormResult {
        let (n, m) = (self.n, self.m());
        let y0 = self.n;

        // Per-particle route: (1/G) d^2 G / dz^2 = (grad)' + (grad)^2,
        // with phi' = -V.
        let mut d2x = 0.0;
        let mut pot_x = 0.0;
        for j in 0..n {
            let s = self.grad_x(g, j);
            let own: f64 = (0..n).filter(|&k| k != j).map(|k| self.v_at(j, k)).sum();
            let cross: f64 = (y0..self.k).map(|kk| self.v_at(j, kk)).sum();
            d2x += -g.lambda1 * own + g.lambda3 * cross + s * s;
        }
        for j in 0..n {
            for k in 0..j {
                pot_x += self.v_at(j, k);
            }
        }
        pot_x *= 2.0 * g.lambda1 * (g.lambda1 - 1.0);

        let mut d2y = 0.0;
        let mut pot_y = 0.0;
        for jj in 0..m {
            let row = y0 + jj;
            let s = self.grad_y(g, jj);
            let own: f64 = (y0..self.k)
                .filter(|&kk| kk != row)
                .map(|kk| self.v_at(row, kk))
                .sum();
            let cross: f64 = (0..n).map(|k| self.v_at(row, k)).sum();
            d2y += -g.lambda2 * own + g.lambda3 * cross + s * s;
        }
        for jj in y0..self.k {
            for kk in y0..jj {
                pot_y += self.v_at(jj, kk);
            }
        }
        pot_y *= 2.0 * g.lambda2 * (g.lambda2 - 1.0);

        let h_x = -d2x + pot_x;
        let h_y = -d2y + pot_y;
        let direct = h_x - g.a * h_y;

        // Grouped route: the four regrouped second-derivative sums
        // W = W1 + W2 + W3 + W4 with W = (1/G)(sum d^2/dx^2 - A sum d^2/dy^2)G.
        let mut w1 = 0.0;
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    let (phi, v) = (self.phi_at(j, k), self.v_at(j, k));
                    w1 += -g.lambda1 * v + g.lambda1 * g.lambda1 * phi * phi;
                }
            }
        }
        for jj in y0..self.k {
            for kk in y0..self.k {
                if kk != jj {
                    let (phi, v) = (self.phi_at(jj, kk), self.v_at(jj, kk));
                    w1 -= g.a * (-g.lambda2 * v + g.lambda2 * g.lambda2 * phi * phi);
                }
            }
        }

        let mut w2 = 0.0;
        for j in 0..n {
            let sum: f64 = (0..n).filter(|&k| k != j).map(|k| self.phi_at(j, k)).sum();
            let sq: f64 = (0..n)
                .filter(|&k| k != j)
                .map(|k| self.phi_at(j, k) * self.phi_at(j, k))
                .sum();
            w2 += g.lambda1 * g.lambda1 * (sum * sum - sq);
        }
        for jj in y0..self.k {
            let sum: f64 = (y0..self.k)
                .filter(|&kk| kk != jj)
                .map(|kk| self.phi_at(jj, kk))
                .sum();
            let sq: f64 = (y0..self.k)
                .filter(|&kk| kk != jj)
                .map(|kk| self.phi_at(jj, kk) * self.phi_at(jj, kk))
                .sum();
            w2 -= g.a * g.lambda2 * g.lambda2 * (sum * sum - sq);
        }

        let mut w3 = 0.0;
        for j in 0..n {
            for kk in y0..self.k {
                let (phi, v) = (self.phi_at(j, kk), self.v_at(j, kk));
                w3 += g.lambda3 * v + g.lambda3 * g.lambda3 * phi * phi;
            }
        }
        w3 *= 1.0 - g.a;

        let mut w4 = 0.0;
        for j in 0..n {
            let cross: f64 = (y0..self.k).map(|kk| self.phi_at(j, kk)).sum();
            let cross_sq: f64 = (y0..self.k)
                .map(|kk| self.phi_at(j, kk) * self.phi_at(j, kk))
                .sum();
            let own: f64 = (0..n).filter(|&k| k != j).map(|k| self.phi_at(j, k)).sum();
            w4 += g.lambda3 * g.lambda3 * (cross * cross - cross_sq)
                - 2.0 * g.lambda1 * g.lambda3 * own * cross;
        }
        for jj in 0..m {
            let row = y0 + jj;
            let cross: f64 = (0..n).map(|k| self.phi_at(row, k)).sum();
            let cross_sq: f64 = (0..n)
                .map(|k| self.phi_at(row, k) * self.phi_at(row, k))
                .sum();
            let own: f64 = (y0..self.k)
                .filter(|&kk| kk != row)
                .map(|kk| self.phi_at(row, kk))
                .sum();
            w4 += -g.a * g.lambda3 * g.lambda3 * (cross * cross - cross_sq)
                + 2.0 * g.a * g.lambda2 * g.lambda3 * own * cross;
        }

        let components = Components {
            kinetic: [-w1, -w2, -w3, -w4],
            potential_x: pot_x,
            potential_y: -g.a * pot_y,
        };

        let conditions = check_conditions(g, n, m);
        let reduced = if conditions.cond1 && conditions.cond2 {
            let c0 = elliptic::const_c0(p).value;
            let (fx, fy, fxy) = self.f_sums();
            let nf = n as f64;
            let mf = m as f64;
            let big_c0 = (nf * (nf - 1.0) * g.lambda1 * g.lambda1
                - g.a * mf * (mf - 1.0) * g.lambda2 * g.lambda2
                + (1.0 - g.a) * g.lambda3 * g.lambda3 * nf * mf)
                * c0;
            Some(
                big_c0 + conditions.c1 * fx + conditions.c2 * fy - conditions.c3 * fxy,
            )
        } else {
            None
        };

        LogFormResult {
            value: components.sum(),
            components,
            direct,
            h_x,
            h_y,
            reduced,
        }
    }

    /// Applies the two total momentum operators. The results are purely
    /// imaginary; this returns the real factors (px, py) with
    /// (P G)/G = i * px for the x family and i * py for the y family.
    pub fn apply_p(&self, g: &GeneralCoupling) -> MomentumPair {
        let mut px = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..self.n {
            let s = self.grad_x(g, j);
            px += s;
            scale = scale.max(s.abs());
        }
        let mut py = 0.0;
        for jj in 0..self.m() {
            let s = self.grad_y(g, jj);
            py += s;
            scale = scale.max(s.abs());
        }
        MomentumPair {
            p_x: px,
            p_y: py,
            scale: scale.max(px.abs()).max(py.abs()),
        }
    }

    /// (1/G) dG/d(beta): the coupling-weighted sum of d(log theta)/d(beta)
    /// over all pair blocks.
    pub fn dbeta(&self, g: &GeneralCoupling) -> f64 {
        let y0 = self.n;
        let mut dx = 0.0;
        for j in 0..self.n {
            for k in 0..j {
                dx += self.dlt_at(j, k);
            }
        }
        let mut dy = 0.0;
        for jj in y0..self.k {
            for kk in y0..jj {
                dy += self.dlt_at(jj, kk);
            }
        }
        let mut dxy = 0.0;
        for j in 0..self.n {
            for kk in y0..self.k {
                dxy += self.dlt_at(j, kk);
            }
        }
        g.lambda1 * dx + g.lambda2 * dy - g.lambda3 * dxy
    }

    /// log G with the principal branch taken factor by factor:
    /// log theta^lambda := lambda (ln|theta| + i pi [theta < 0]).
    pub fn log_g(&self, g: &GeneralCoupling) -> Complex64 {
        let y0 = self.n;
        let mut re = 0.0;
        let mut im = 0.0;
        // x block uses theta(x_k - x_j) for j < k.
        for j in 0..self.n {
            for k in (j + 1)..self.n {
                let idx = k * self.k + j;
                re += g.lambda1 * self.log_abs[idx];
                if self.negative[idx] {
                    im += g.lambda1 * PI;
                }
            }
        }
        // y block uses theta(y_J - y_K) for J < K.
        for jj in y0..self.k {
            for kk in (jj + 1)..self.k {
                let idx = jj * self.k + kk;
                re += g.lambda2 * self.log_abs[idx];
                if self.negative[idx] {
                    im += g.lambda2 * PI;
                }
            }
        }
        for j in 0..self.n {
            for kk in y0..self.k {
                let idx = j * self.k + kk;
                re -= g.lambda3 * self.log_abs[idx];
                if self.negative[idx] {
                    im -= g.lambda3 * PI;
                }
            }
        }
        Complex64::new(re, im)
    }
}

/// Additive pieces of one Hamiltonian-difference application: the four
/// grouped kinetic sums (already negated, so they add directly) and the two
/// explicit pair-potential sums (the y one carries its -A weight).
#[derive(Debug, Clone, Copy)]
pub struct Components {
    pub kinetic: [f64; 4],
    pub potential_x: f64,
    pub potential_y: f64,
}

impl Components {
    pub fn sum(&self) -> f64 {
        self.kinetic.iter().sum::<f64>() + self.potential_x + self.potential_y
    }

    /// Largest magnitude among the addends; the natural scale for judging
    /// how much cancellation the assembled value survived.
    pub fn max_abs(&self) -> f64 {
        self.kinetic
            .iter()
            .map(|k| k.abs())
            .fold(self.potential_x.abs().max(self.potential_y.abs()), f64::max)
    }
}

/// Result of applying (H_{lambda1,N}(x) - A H_{lambda2,M}(y)) to G in
/// logarithmic form.
#[derive(Debug, Clone, Copy)]
pub struct LogFormResult {
    /// The operator application (grouped route); equals
    /// `components.sum()` by construction.
    pub value: f64,
    pub components: Components,
    /// The same number assembled particle by particle without regrouping.
    /// Agreement with `value` is a structural self-check, not an identity.
    pub direct: f64,
    /// (H_{lambda1,N}(x) G)/G alone.
    pub h_x: f64,
    /// (H_{lambda2,M}(y) G)/G alone.
    pub h_y: f64,
    /// The closed form C0 + C1 sum f(x-x) + C2 sum f(y-y) - C3 sum f(x-y),
    /// available when the coupling satisfies the reduction conditions.
    pub reduced: Option<f64>,
}

impl LogFormResult {
    /// Scale against which residuals involving this application are judged.
    pub fn scale(&self) -> f64 {
        self.components
            .max_abs()
            .max(self.h_x.abs())
            .max(self.h_y.abs())
    }
}

/// Momentum applications (P_N(x) G)/G = i p_x and (P_M(y) G)/G = i p_y,
/// with the largest single-particle gradient recorded as the scale.
#[derive(Debug, Clone, Copy)]
pub struct MomentumPair {
    pub p_x: f64,
    pub p_y: f64,
    pub scale: f64,
}

/// Parameter constraints under which the grouped kinetic sums collapse to
/// pure f-sums, and the resulting coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// (1 - A) lambda3 (lambda3 + 1) = 0: the mixed V-terms cancel.
    pub cond1: bool,
    /// lambda3 = A lambda2 and A lambda3 = lambda1: the cross products
    /// telescope through the three-argument functional identity.
    pub cond2: bool,
    /// Coefficients of the three f-sums in the reduced form,
    /// C1 = 2(N lambda1^2 - A M lambda3^2),
    /// C2 = 2(N lambda3^2 - A M lambda2^2),
    /// C3 = 2(A N - M) lambda3^2.
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// The common C with C_i = C lambda_i, when all three ratios agree;
    /// exactly then the f-sums assemble into C d(log G)/d(beta).
    pub proportional: Option<f64>,
    /// Which named coupling family (if either) the parameters realise.
    pub family: Option<CouplingFamily>,
}

impl ConditionReport {
    /// True when the full operator identity holds: both reduction
    /// conditions plus proportionality of the f-coefficients.
    pub fn valid(&self) -> bool {
        self.cond1 && self.cond2 && self.proportional.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingFamily {
    /// (lambda, lambda, lambda, A = 1), C = 2(N - M) lambda.
    Main,
    /// (lambda, 1/lambda, -1, A = -lambda), C = 2(lambda N + M).
    Dual,
}

impl CouplingFamily {
    /// The coupling set this family assigns to one interaction strength.
    pub fn coupling(self, lambda: f64) -> Result<GeneralCoupling> {
        match self {
            CouplingFamily::Main => GeneralCoupling::main_family(lambda),
            CouplingFamily::Dual => GeneralCoupling::dual_family(lambda),
        }
    }
}

impl fmt::Display for CouplingFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingFamily::Main => "main",
            CouplingFamily::Dual => "dual",
        })
    }
}

fn nearly(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONDITION_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Checks the reduction conditions for a coupling set at particle numbers
/// (N, M) and reports the f-sum coefficients together with the common
/// proportionality constant C when it exists.
pub fn check_conditions(g: &GeneralCoupling, n: usize, m: usize) -> ConditionReport {
    let (nf, mf) = (n as f64, m as f64);
    let cond1 = nearly((1.0 - g.a) * g.lambda3 * (g.lambda3 + 1.0), 0.0);
    let cond2 = nearly(g.lambda3, g.a * g.lambda2) && nearly(g.a * g.lambda3, g.lambda1);
    let l3sq = g.lambda3 * g.lambda3;
    let c1 = 2.0 * (nf * g.lambda1 * g.lambda1 - g.a * mf * l3sq);
    let c2 = 2.0 * (nf * l3sq - g.a * mf * g.lambda2 * g.lambda2);
    let c3 = 2.0 * (g.a * nf - mf) * l3sq;
    let c = c1 / g.lambda1;
    let proportional =
        if nearly(c2, c * g.lambda2) && nearly(c3, c * g.lambda3) && nearly(c1, c * g.lambda1) {
            Some(c)
        } else {
            None
        };
    let family = if nearly(g.a, 1.0)
        && nearly(g.lambda1, g.lambda2)
        && nearly(g.lambda2, g.lambda3)
    {
        Some(CouplingFamily::Main)
    } else if nearly(g.a, -g.lambda1)
        && nearly(g.lambda2 * g.lambda1, 1.0)
        && nearly(g.lambda3, -1.0)
    {
        Some(CouplingFamily::Dual)
    } else {
        None
    };
    ConditionReport {
        cond1,
        cond2,
        c1,
        c2,
        c3,
        proportional,
        family,
    }
}

/// log of the symmetric product function (main family) via [`PairTables`].
pub fn log_f(cfg: &Configuration, c: &CouplingParams, p: &ModulusParams) -> Result<Complex64> {
    let g = GeneralCoupling::main_family(c.lambda)?;
    Ok(PairTables::new(cfg, p)?.log_g(&g))
}

/// log of the dual product function (coupling paired with its inverse).
pub fn log_f_tilde(
    cfg: &Configuration,
    c: &CouplingParams,
    p: &ModulusParams,
) -> Result<Complex64> {
    let g = GeneralCoupling::dual_family(c.lambda)?;
    Ok(PairTables::new(cfg, p)?.log_g(&g))
}

/// log G for an arbitrary coupling set.
pub fn log_g_general(
    cfg: &Configuration,
    g: &GeneralCoupling,
    p: &ModulusParams,
) -> Result<Complex64> {
    Ok(PairTables::new(cfg, p)?.log_g(g))
}

/// One-shot (H_{lambda1,N}(x) - A H_{lambda2,M}(y)) G / G.
pub fn apply_h_logform(
    cfg: &Configuration,
    g: &GeneralCoupling,
    p: &ModulusParams,
) -> Result<LogFormResult> {
    Ok(PairTables::new(cfg, p)?.apply_h(g, p))
}

/// One-shot momentum applications.
pub fn apply_p_logform(
    cfg: &Configuration,
    g: &GeneralCoupling,
    p: &ModulusParams,
) -> Result<MomentumPair> {
    Ok(PairTables::new(cfg, p)?.apply_p(g))
}

/// One-shot (1/G) dG/d(beta).
pub fn dbeta_logform(cfg: &Configuration, g: &GeneralCoupling, p: &ModulusParams) -> Result<f64> {
    Ok(PairTables::new(cfg, p)?.dbeta(g))
}

/// Real part of log G evaluated on raw coordinate slices, without the
/// range and separation validation of [`Configuration`]. The
/// finite-difference oracle uses this to evaluate shifted stencil points
/// (log|theta| is exactly 2pi-periodic, so wrapping is unnecessary).
pub(crate) fn re_log_g_raw(
    x: &[f64],
    y: &[f64],
    g: &GeneralCoupling,
    p: &ModulusParams,
) -> Result<f64> {
    let term = |d: f64| -> Result<f64> {
        let t = elliptic::theta(d, p).value;
        elliptic::guard_pole(d, t.abs())?;
        Ok(t.abs().ln())
    };
    let mut re = 0.0;
    for (j, &xj) in x.iter().enumerate() {
        for &xk in &x[..j] {
            re += g.lambda1 * term(xj - xk)?;
        }
    }
    for (jj, &ya) in y.iter().enumerate() {
        for &yb in &y[..jj] {
            re += g.lambda2 * term(ya - yb)?;
        }
    }
    for &xj in x {
        for &yk in y {
            re -= g.lambda3 * term(xj - yk)?;
        }
    }
    Ok(re)
}

/// Both closed forms of a constant: the (c0, c1) polynomial and its
/// rearrangement through the Lambert-type sum c2. The two are evaluated
/// along genuinely different series routes and must agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantForms {
    pub primary: f64,
    pub lambert: f64,
}

/// The constant c_{N,M} of the symmetric-family identity:
///
/// ```text
/// primary: lambda^2 [N(N-1) - M(M-1)] c0
///        + (N-M) lambda^2 [N(N-1) + M(M-1) - 2NM] c1
/// lambert: (lambda^2/12)(N-M)[(N-M)^2 - 1] - 2 lambda^2 (N-M)(N+M-1) c2
/// ```
pub fn const_c_nm(n: usize, m: usize, lambda: f64, p: &ModulusParams) -> ConstantForms {
    let (nf, mf) = (n as f64, m as f64);
    let l2 = lambda * lambda;
    let c0 = elliptic::const_c0(p).value;
    let c1 = elliptic::const_c1();
    let c2 = elliptic::const_c2(p).value;
    let primary = l2 * (nf * (nf - 1.0) - mf * (mf - 1.0)) * c0
        + (nf - mf) * l2 * (nf * (nf - 1.0) + mf * (mf - 1.0) - 2.0 * nf * mf) * c1;
    let d = nf - mf;
    let lambert = l2 / 12.0 * d * (d * d - 1.0) - 2.0 * l2 * d * (nf + mf - 1.0) * c2;
    ConstantForms { primary, lambert }
}

/// The constant of the dual-family identity:
///
/// ```text
/// primary: [lambda^2 N(N-1) + M(M-1)/lambda + (1+lambda)NM] c0
///        + (lambda N + M)[lambda N(N-1) + M(M-1)/lambda + 2NM] c1
/// lambert: (1/12)[lambda^2 N^3 + M^3/lambda + 3NM(lambda N + M)
///                 - (lambda^2 N + M/lambda)]
///        - 2 [lambda^2 N^2 + M^2/lambda - (lambda^2 N + M/lambda)
///                 + (lambda+1) M N] c2
/// ```
pub fn const_c_nm_tilde(n: usize, m: usize, lambda: f64, p: &ModulusParams) -> ConstantForms {
    let (nf, mf) = (n as f64, m as f64);
    let l2 = lambda * lambda;
    let c0 = elliptic::const_c0(p).value;
    let c1 = elliptic::const_c1();
    let c2 = elliptic::const_c2(p).value;
    let primary = (l2 * nf * (nf - 1.0) + mf * (mf - 1.0) / lambda + (1.0 + lambda) * nf * mf)
        * c0
        + (lambda * nf + mf) * (lambda * nf * (nf - 1.0) + mf * (mf - 1.0) / lambda + 2.0 * nf * mf)
            * c1;
    let lambert = (l2 * nf * nf * nf + mf * mf * mf / lambda
        + 3.0 * nf * mf * (lambda * nf + mf)
        - (l2 * nf + mf / lambda))
        / 12.0
        - 2.0
            * (l2 * nf * nf + mf * mf / lambda - (l2 * nf + mf / lambda)
                + (lambda + 1.0) * mf * nf)
            * c2;
    ConstantForms { primary, lambert }
}

/// Identity constants after renormalising the potential by b0 and theta by
/// a beta-dependent prefactor with logarithmic slope b1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeShiftedConstants {
    pub c_nm: f64,
    pub c_nm_tilde: f64,
}

/// Shifts both identity constants for the renormalisation V -> V + b0,
/// theta -> B1 theta with d(log B1)/d(beta) = b1:
///
/// ```text
/// c_{N,M}  -> c_{N,M} - lambda(lambda-1)[N(N-1) - M(M-1)] b0
///                     - (N-M) lambda^2 [N(N-1) + M(M-1) - 2NM] b1
/// c~_{N,M} -> c~_{N,M} - [lambda(lambda-1)N(N-1) + (1/lambda - 1)M(M-1)] b0
///                     - (lambda N + M)[lambda N(N-1) + M(M-1)/lambda + 2NM] b1
/// ```
pub fn gauge_transform_constants(
    n: usize,
    m: usize,
    lambda: f64,
    b0: f64,
    b1: f64,
    p: &ModulusParams,
) -> GaugeShiftedConstants {
    let (nf, mf) = (n as f64, m as f64);
    let c = const_c_nm(n, m, lambda, p).primary;
    let ct = const_c_nm_tilde(n, m, lambda, p).primary;
    let c_nm = c
        - lambda * (lambda - 1.0) * (nf * (nf - 1.0) - mf * (mf - 1.0)) * b0
        - (nf - mf) * lambda * lambda * (nf * (nf - 1.0) + mf * (mf - 1.0) - 2.0 * nf * mf) * b1;
    let c_nm_tilde = ct
        - (lambda * (lambda - 1.0) * nf * (nf - 1.0) + (1.0 / lambda - 1.0) * mf * (mf - 1.0))
            * b0
        - (lambda * nf + mf)
            * (lambda * nf * (nf - 1.0) + mf * (mf - 1.0) / lambda + 2.0 * nf * mf)
            * b1;
    GaugeShiftedConstants { c_nm, c_nm_tilde }
}

/// Closed forms the gauge-shifted constants collapse to at b0 = c0,
/// b1 = c1 (the normalisation using the standard elliptic functions):
///
/// ```text
/// c_{N,M}  -> lambda [N(N-1) - M(M-1)] c0
/// c~_{N,M} -> [lambda N(N-1) + M(M-1) + (1+lambda) M N] c0
/// ```
pub fn simplified_constants(n: usize, m: usize, lambda: f64, p: &ModulusParams) -> GaugeShiftedConstants {
    let (nf, mf) = (n as f64, m as f64);
    let c0 = elliptic::const_c0(p).value;
    GaugeShiftedConstants {
        c_nm: lambda * (nf * (nf - 1.0) - mf * (mf - 1.0)) * c0,
        c_nm_tilde: (lambda * nf * (nf - 1.0) + mf * (mf - 1.0) + (1.0 + lambda) * mf * nf) * c0,
    }
}

/// Phases relating the anyon correlation functions to the product
/// functions: for statistics parameters (nu, mu),
///
/// ```text
/// p1 = (1/2)(nu^2 N - nu mu M),   p2 = (1/2)(mu^2 M - nu mu N).
/// ```
///
/// At nu = mu = sqrt(lambda) this gives p1 = -p2 = (1/2) lambda (N - M);
/// at nu = sqrt(lambda), mu = -1/sqrt(lambda) it gives
/// p1 = (1/2)(lambda N + M), p2 = (1/2)(N + M/lambda).
pub fn correlation_phases(n: usize, m: usize, nu: f64, mu: f64) -> (f64, f64) {
    let (nf, mf) = (n as f64, m as f64);
    let p1 = 0.5 * (nu * nu * nf - nu * mu * mf);
    let p2 = 0.5 * (mu * mu * mf - nu * mu * nf);
    (p1, p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::theta;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(q: f64) -> ModulusParams {
        ModulusParams::from_q(q).unwrap()
    }

    fn sample_cfg(n: usize, m: usize, seed: u64) -> Configuration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Configuration::sample(n, m, 0.15, &mut rng).unwrap()
    }

    #[test]
    fn log_f_is_zero_without_pairs() {
        let p = params(0.5);
        let cfg = Configuration::new(vec![0.7], vec![]).unwrap();
        let lf = log_f(&cfg, &CouplingParams::new(1.5).unwrap(), &p).unwrap();
        assert_eq!(lf, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn log_f_matches_a_directly_assembled_product() {
        let p = params(0.4);
        let cfg = Configuration::new(vec![-1.2, 0.3, 2.0], vec![-2.4, 1.1]).unwrap();
        let lambda = 2.0;
        // F = prod theta(x_k - x_j)^2 prod theta(y_J - y_K)^2 / prod theta(x_j - y_K)^2
        // is positive for even integer exponents, so |.| comparison suffices.
        let th = |d: f64| theta(d, &p).value;
        let x = cfg.x();
        let y = cfg.y();
        let mut product = 1.0;
        for j in 0..3 {
            for k in (j + 1)..3 {
                product *= th(x[k] - x[j]).powi(2);
            }
        }
        product *= th(y[0] - y[1]).powi(2);
        for &xj in x {
            for &yk in y {
                product /= th(xj - yk).powi(2);
            }
        }
        let lf = log_f(&cfg, &CouplingParams::new(lambda).unwrap(), &p).unwrap();
        assert_relative_eq!(lf.re.exp(), product.abs(), max_relative = 1e-12);
    }

    #[test]
    fn log_f_tilde_uses_inverse_coupling_and_positive_cross_exponent() {
        let p = params(0.3);
        let cfg = Configuration::new(vec![0.4, 1.9], vec![-1.0]).unwrap();
        let lambda = 2.0;
        let th = |d: f64| theta(d, &p).value;
        let x = cfg.x();
        let expected = th(x[1] - x[0]).abs().powf(2.0)
            * th(x[0] + 1.0).abs()
            * th(x[1] + 1.0).abs();
        let lf = log_f_tilde(&cfg, &CouplingParams::new(lambda).unwrap(), &p).unwrap();
        assert_relative_eq!(lf.re.exp(), expected, max_relative = 1e-12);
    }

    #[test]
    fn swapping_two_x_coordinates_changes_the_phase_by_odd_pi_lambda() {
        let p = params(0.45);
        let lambda = 1.7;
        let c = CouplingParams::new(lambda).unwrap();
        let cfg = Configuration::new(vec![-0.9, 0.8, 2.2], vec![-2.5]).unwrap();
        let swapped = Configuration::new(vec![0.8, -0.9, 2.2], vec![-2.5]).unwrap();
        let a = log_f(&cfg, &c, &p).unwrap();
        let b = log_f(&swapped, &c, &p).unwrap();
        assert_relative_eq!(a.re, b.re, max_relative = 1e-13);
        let k = (b.im - a.im) / (lambda * PI);
        assert_relative_eq!(k.rem_euclid(2.0), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn real_part_of_log_f_is_translation_invariant() {
        let p = params(0.6);
        let c = CouplingParams::new(0.8).unwrap();
        let cfg = sample_cfg(3, 2, 11);
        let base = log_f(&cfg, &c, &p).unwrap().re;
        for &a in &[0.3, 1.7, -2.2] {
            let moved = log_f(&cfg.translated(a), &c, &p).unwrap().re;
            assert_relative_eq!(base, moved, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn momentum_factors_cancel_for_both_families() {
        let p = params(0.55);
        for seed in 0..5 {
            let cfg = sample_cfg(4, 2, seed);
            for g in [
                GeneralCoupling::main_family(1.5).unwrap(),
                GeneralCoupling::dual_family(2.0).unwrap(),
            ] {
                let mp = apply_p_logform(&cfg, &g, &p).unwrap();
                assert!(
                    (mp.p_x + mp.p_y).abs() <= 1e-12 * mp.scale.max(1.0),
                    "momentum residual {} at scale {}",
                    mp.p_x + mp.p_y,
                    mp.scale
                );
            }
        }
    }

    #[test]
    fn single_particle_operator_applications_vanish() {
        let p = params(0.5);
        let cfg = Configuration::new(vec![1.0], vec![]).unwrap();
        let g = GeneralCoupling::main_family(2.0).unwrap();
        let r = apply_h_logform(&cfg, &g, &p).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(dbeta_logform(&cfg, &g, &p).unwrap(), 0.0);
        let mp = apply_p_logform(&cfg, &g, &p).unwrap();
        assert_eq!((mp.p_x, mp.p_y), (0.0, 0.0));
    }

    #[test]
    fn beta_derivative_decays_quadratically_in_the_nome() {
        let cfg = sample_cfg(2, 2, 17);
        let g = GeneralCoupling::main_family(1.5).unwrap();
        let small = dbeta_logform(&cfg, &g, &params(1e-6)).unwrap().abs();
        let large = dbeta_logform(&cfg, &g, &params(1e-3)).unwrap().abs();
        assert!(small < 1e-9, "got {small}");
        let ratio = large / small;
        assert!((1e5..1e7).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn two_particle_application_matches_the_hand_formula() {
        let p = params(0.4);
        let lambda = 1.8;
        let cfg = Configuration::new(vec![0.4, 2.1], vec![]).unwrap();
        let g = GeneralCoupling::main_family(lambda).unwrap();
        let r = apply_h_logform(&cfg, &g, &p).unwrap();
        let d = cfg.x()[0] - cfg.x()[1];
        let phi = crate::elliptic::phi(d, &p).unwrap().value;
        let v = crate::elliptic::potential_v(d, &p).unwrap().value;
        // -(1/G) sum d^2 G = -2 (lambda phi' + lambda^2 phi^2), phi' = -V.
        let expected = -2.0 * (-lambda * v + lambda * lambda * phi * phi)
            + 2.0 * lambda * (lambda - 1.0) * v;
        assert_relative_eq!(r.value, expected, max_relative = 1e-13);
        assert_relative_eq!(r.direct, expected, max_relative = 1e-13);
    }

    #[test]
    fn grouped_and_per_particle_routes_agree_for_general_couplings() {
        let p = params(0.65);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(0..=3);
            let cfg = Configuration::sample(n, m, 0.12, &mut rng).unwrap();
            let g = GeneralCoupling::new(
                rng.gen_range(0.3..3.0),
                rng.gen_range(0.3..3.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            )
            .unwrap();
            let r = apply_h_logform(&cfg, &g, &p).unwrap();
            let scale = r.scale().max(1.0);
            assert!(
                (r.value - r.direct).abs() <= 1e-12 * scale,
                "grouped {} vs direct {} at scale {}",
                r.value,
                r.direct,
                scale
            );
            assert_relative_eq!(r.value, r.components.sum(), max_relative = 1e-15);
        }
    }

    #[test]
    fn reduced_form_reproduces_the_operator_application() {
        let p = params(0.5);
        for (seed, g) in [
            (3, GeneralCoupling::main_family(1.5).unwrap()),
            (4, GeneralCoupling::dual_family(0.7).unwrap()),
            (5, GeneralCoupling::main_family(1.0).unwrap()),
        ] {
            let cfg = sample_cfg(3, 2, seed);
            let r = apply_h_logform(&cfg, &g, &p).unwrap();
            let reduced = r.reduced.expect("reduction conditions hold");
            assert!(
                (r.value - reduced).abs() <= 1e-10 * r.scale().max(1.0),
                "value {} vs reduced {}",
                r.value,
                reduced
            );
        }
    }

    #[test]
    fn reduced_form_is_absent_for_generic_couplings() {
        let p = params(0.5);
        let cfg = sample_cfg(2, 2, 9);
        let g = GeneralCoupling::new(1.0, 2.0, 3.0, 1.0).unwrap();
        assert!(apply_h_logform(&cfg, &g, &p).unwrap().reduced.is_none());
    }

    #[test]
    fn main_identity_closes_end_to_end() {
        let p = params(0.5);
        let lambda = 1.5;
        let (n, m) = (3, 1);
        let cfg = sample_cfg(n, m, 17);
        let g = GeneralCoupling::main_family(lambda).unwrap();
        let tables = PairTables::new(&cfg, &p).unwrap();
        let h = tables.apply_h(&g, &p);
        let db = tables.dbeta(&g);
        let c = const_c_nm(n, m, lambda, &p).primary;
        let residual = h.value + 2.0 * (n as f64 - m as f64) * lambda * db - c;
        assert!(
            residual.abs() <= 1e-10 * h.scale().max(1.0),
            "residual {residual}"
        );
    }

    #[test]
    fn dual_identity_closes_end_to_end() {
        let p = params(0.4);
        let lambda = 2.0;
        let (n, m) = (2, 3);
        let cfg = sample_cfg(n, m, 29);
        let g = GeneralCoupling::dual_family(lambda).unwrap();
        let tables = PairTables::new(&cfg, &p).unwrap();
        let h = tables.apply_h(&g, &p);
        let db = tables.dbeta(&g);
        let c = const_c_nm_tilde(n, m, lambda, &p).primary;
        let residual = h.value + 2.0 * (lambda * n as f64 + m as f64) * db - c;
        assert!(
            residual.abs() <= 1e-10 * h.scale().max(1.0),
            "residual {residual}"
        );
    }

    #[test]
    fn conditions_hold_exactly_for_both_families() {
        for lambda in [0.5, 1.0, 2.5] {
            let g = GeneralCoupling::main_family(lambda).unwrap();
            let r = check_conditions(&g, 4, 2);
            assert!(r.cond1 && r.cond2 && r.valid());
            assert_eq!(r.family, Some(CouplingFamily::Main));
            assert_relative_eq!(
                r.proportional.unwrap(),
                2.0 * (4.0 - 2.0) * lambda,
                max_relative = 1e-12
            );

            let g = GeneralCoupling::dual_family(lambda).unwrap();
            let r = check_conditions(&g, 4, 2);
            assert!(r.cond1 && r.cond2 && r.valid());
            assert_eq!(r.family, Some(CouplingFamily::Dual));
            assert_relative_eq!(
                r.proportional.unwrap(),
                2.0 * (lambda * 4.0 + 2.0),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn mismatched_couplings_fail_the_conditions() {
        let g = GeneralCoupling::new(1.0, 2.0, 3.0, 1.0).unwrap();
        let r = check_conditions(&g, 3, 2);
        assert!(!r.cond2);
        assert!(!r.valid());
        assert_eq!(r.family, None);
    }

    #[test]
    fn constant_forms_agree_across_particle_numbers_and_moduli() {
        for &q in &[0.0, 0.3, 0.7] {
            let p = params(q);
            for n in 0..=8 {
                for m in 0..=8 {
                    for &lambda in &[0.5, 1.0, 2.0, 3.0] {
                        let c = const_c_nm(n, m, lambda, &p);
                        let scale = c.primary.abs().max(c.lambert.abs()).max(1.0);
                        assert!(
                            (c.primary - c.lambert).abs() <= 1e-12 * scale,
                            "c_({n},{m}) lambda {lambda} q {q}: {} vs {}",
                            c.primary,
                            c.lambert
                        );
                        let ct = const_c_nm_tilde(n, m, lambda, &p);
                        let scale = ct.primary.abs().max(ct.lambert.abs()).max(1.0);
                        assert!(
                            (ct.primary - ct.lambert).abs() <= 1e-12 * scale,
                            "c~_({n},{m}) lambda {lambda} q {q}: {} vs {}",
                            ct.primary,
                            ct.lambert
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn balanced_particle_numbers_give_exactly_zero_main_constant() {
        let p = params(0.6);
        for n in 0..=8 {
            let c = const_c_nm(n, n, 1.7, &p);
            assert_eq!(c.primary, 0.0);
            assert_eq!(c.lambert, 0.0);
        }
    }

    #[test]
    fn two_particle_constant_has_its_textbook_form() {
        let p = params(0.35);
        let lambda = 2.2;
        let c = const_c_nm(2, 0, lambda, &p).primary;
        let expected = 2.0 * lambda * lambda * elliptic::const_c0(&p).value
            + 4.0 * lambda * lambda * elliptic::const_c1();
        assert_relative_eq!(c, expected, max_relative = 1e-14);
    }

    #[test]
    fn sutherland_limit_constant_is_the_ground_state_eigenvalue() {
        let p = params(0.0);
        for n in 1..=6 {
            for &lambda in &[0.5, 1.0, 2.0] {
                let nf = n as f64;
                let c = const_c_nm(n, 0, lambda, &p).primary;
                assert_relative_eq!(
                    c,
                    lambda * lambda * nf * (nf * nf - 1.0) / 12.0,
                    max_relative = 1e-13,
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn gauge_shift_is_inert_at_zero_and_collapses_at_the_natural_point() {
        let p = params(0.55);
        for (n, m) in [(2, 0), (3, 1), (4, 4), (5, 2)] {
            for &lambda in &[0.5, 1.0, 1.5] {
                let plain = gauge_transform_constants(n, m, lambda, 0.0, 0.0, &p);
                assert_eq!(plain.c_nm, const_c_nm(n, m, lambda, &p).primary);
                assert_eq!(
                    plain.c_nm_tilde,
                    const_c_nm_tilde(n, m, lambda, &p).primary
                );

                let c0 = elliptic::const_c0(&p).value;
                let c1 = elliptic::const_c1();
                let shifted = gauge_transform_constants(n, m, lambda, c0, c1, &p);
                let simple = simplified_constants(n, m, lambda, &p);
                let scale = simple.c_nm.abs().max(1.0);
                assert!(
                    (shifted.c_nm - simple.c_nm).abs() <= 1e-12 * scale,
                    "({n},{m}) lambda {lambda}: {} vs {}",
                    shifted.c_nm,
                    simple.c_nm
                );
                let scale = simple.c_nm_tilde.abs().max(1.0);
                assert!(
                    (shifted.c_nm_tilde - simple.c_nm_tilde).abs() <= 1e-12 * scale,
                    "({n},{m}) lambda {lambda}: {} vs {}",
                    shifted.c_nm_tilde,
                    simple.c_nm_tilde
                );
            }
        }
    }

    #[test]
    fn phases_reduce_to_the_two_family_forms() {
        for n in 0..=10usize {
            for m in 0..=10usize {
                for &lambda in &[0.5f64, 1.0, 2.0, 3.0] {
                    let root = lambda.sqrt();
                    let eps = 8.0 * f64::EPSILON;
                    let (nf, mf) = (n as f64, m as f64);

                    let (p1, p2) = correlation_phases(n, m, root, root);
                    let expected = 0.5 * lambda * (nf - mf);
                    assert!((p1 - expected).abs() <= eps * expected.abs().max(1.0));
                    assert!((p2 + expected).abs() <= eps * expected.abs().max(1.0));

                    let (p1, p2) = correlation_phases(n, m, root, -1.0 / root);
                    let e1 = 0.5 * (lambda * nf + mf);
                    let e2 = 0.5 * (nf + mf / lambda);
                    assert!((p1 - e1).abs() <= eps * e1.abs().max(1.0));
                    assert!((p2 - e2).abs() <= eps * e2.abs().max(1.0));
                }
            }
        }
    }
}
