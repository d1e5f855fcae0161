//! Finite-difference route to the operator applications of [`crate::manybody`].
//!
//! The engine there evaluates (H G)/G through closed-form derivatives of
//! log theta. This module recomputes the same quantities knowing nothing
//! about those formulas: it differentiates Re log G numerically, coordinate
//! by coordinate (or in beta), using central stencils with optional
//! Richardson extrapolation. Agreement between the two routes checks the
//! entire derivative algebra, not just individual series.
//!
//! Only Re log G enters. The imaginary part of each logarithm is a constant
//! multiple of pi between sign changes of theta, and sign changes coincide
//! with the poles of log|theta| that the stencil guard keeps away from, so
//! the imaginary part contributes nothing to any derivative taken here.

use crate::config::{Configuration, GeneralCoupling};
use crate::elliptic::{self, potential_v};
use crate::error::{Error, Result};
use crate::manybody::re_log_g_raw;
use crate::modulus::{ModulusParams, Q_CAP};

/// Order of the central difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    /// Three-point stencils, error O(h^2).
    Two,
    /// Five-point stencils, error O(h^4).
    Four,
}

impl FdOrder {
    fn leading_exponent(self) -> i32 {
        match self {
            FdOrder::Two => 2,
            FdOrder::Four => 4,
        }
    }

    fn halfwidth_steps(self) -> f64 {
        match self {
            FdOrder::Two => 1.0,
            FdOrder::Four => 2.0,
        }
    }
}

/// Stencil parameters for the finite-difference oracle.
#[derive(Debug, Clone, Copy)]
pub struct FdScheme {
    pub order: FdOrder,
    /// Largest step used; Richardson levels halve it from here.
    pub base_step: f64,
    /// Extra evaluations at h/2, h/4, ... combined by extrapolation.
    /// Zero means the bare stencil.
    pub richardson_levels: usize,
}

impl Default for FdScheme {
    fn default() -> Self {
        Self {
            order: FdOrder::Four,
            base_step: 1e-3,
            richardson_levels: 1,
        }
    }
}

impl FdScheme {
    /// Farthest displacement of any single coordinate.
    pub fn stencil_halfwidth(&self) -> f64 {
        self.order.halfwidth_steps() * self.base_step
    }
}

/// One level of the Richardson triangle. `seq[i]` is the stencil estimate
/// at step h / 2^i; the error expansion is in even powers starting at
/// h^order, so level j cancels the h^(order + 2(j-1)) term.
fn richardson(seq: &mut [f64], order: i32) {
    let n = seq.len();
    for j in 1..n {
        let factor = 2f64.powi(order + 2 * (j as i32 - 1));
        for i in (j..n).rev() {
            seq[i] = (factor * seq[i] - seq[i - 1]) / (factor - 1.0);
        }
    }
}

/// First and second derivative of `eval` at displacement zero, where
/// `eval(delta)` is the target function with one scalar argument shifted
/// by delta.
pub(crate) fn stencil_d1_d2(
    eval: &mut dyn FnMut(f64) -> Result<f64>,
    scheme: &FdScheme,
) -> Result<(f64, f64)> {
    let levels = scheme.richardson_levels + 1;
    let mut d1 = vec![0.0; levels];
    let mut d2 = vec![0.0; levels];
    let f0 = eval(0.0)?;
    for (lvl, (d1_slot, d2_slot)) in d1.iter_mut().zip(d2.iter_mut()).enumerate() {
        let h = scheme.base_step / 2f64.powi(lvl as i32);
        let fp1 = eval(h)?;
        let fm1 = eval(-h)?;
        match scheme.order {
            FdOrder::Two => {
                *d1_slot = (fp1 - fm1) / (2.0 * h);
                *d2_slot = (fm1 - 2.0 * f0 + fp1) / (h * h);
            }
            FdOrder::Four => {
                let fp2 = eval(2.0 * h)?;
                let fm2 = eval(-2.0 * h)?;
                *d1_slot = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
                *d2_slot =
                    (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
            }
        }
    }
    let p = scheme.order.leading_exponent();
    richardson(&mut d1, p);
    richardson(&mut d2, p);
    Ok((d1[levels - 1], d2[levels - 1]))
}

fn guard_stencil(cfg: &Configuration, scheme: &FdScheme) -> Result<()> {
    let halfwidth = scheme.stencil_halfwidth();
    let sep = cfg.min_pairwise_separation();
    if cfg.n() + cfg.m() > 1 && sep <= 2.0 * halfwidth {
        return Err(Error::StencilCollision {
            stencil_halfwidth: halfwidth,
            min_separation: sep,
        });
    }
    Ok(())
}

/// (H_{lambda1,N}(x) - A H_{lambda2,M}(y)) G / G by numerical
/// differentiation: each kinetic term is recovered from
///
/// ```text
/// (1/G) d^2 G / dz^2 = u'' + (u')^2,     u = Re log G,
/// ```
///
/// while the pair potential sums, which involve no derivative of G, are
/// accumulated directly.
pub fn fd_apply_h(
    cfg: &Configuration,
    g: &GeneralCoupling,
    p: &ModulusParams,
    scheme: &FdScheme,
) -> Result<f64> {
    guard_stencil(cfg, scheme)?;
    let x0 = cfg.x().to_vec();
    let y0 = cfg.y().to_vec();

    let mut kinetic = 0.0;
    for j in 0..cfg.n() {
        let mut eval = |delta: f64| -> Result<f64> {
            let mut x = x0.clone();
            x[j] += delta;
            re_log_g_raw(&x, &y0, g, p)
        };
        let (d1, d2) = stencil_d1_d2(&mut eval, scheme)?;
        kinetic -= d2 + d1 * d1;
    }
    for jj in 0..cfg.m() {
        let mut eval = |delta: f64| -> Result<f64> {
            let mut y = y0.clone();
            y[jj] += delta;
            re_log_g_raw(&x0, &y, g, p)
        };
        let (d1, d2) = stencil_d1_d2(&mut eval, scheme)?;
        kinetic += g.a * (d2 + d1 * d1);
    }

    let mut pot = 0.0;
    for j in 0..cfg.n() {
        for k in 0..j {
            pot += 2.0 * g.lambda1 * (g.lambda1 - 1.0) * potential_v(x0[j] - x0[k], p)?.value;
        }
    }
    for jj in 0..cfg.m() {
        for kk in 0..jj {
            pot -=
                g.a * 2.0 * g.lambda2 * (g.lambda2 - 1.0) * potential_v(y0[jj] - y0[kk], p)?.value;
        }
    }
    Ok(kinetic + pot)
}

/// (1/G) dG/d(beta) by central differences in beta at fixed coordinates.
/// Every stencil point re-derives its own truncation order, so the
/// differentiated function is the actual series value used everywhere else.
pub fn fd_dbeta(
    cfg: &Configuration,
    g: &GeneralCoupling,
    p: &ModulusParams,
    scheme: &FdScheme,
) -> Result<f64> {
    let beta = p.beta();
    let reach = scheme.order.halfwidth_steps() * scheme.base_step;
    let beta_min = -2.0 * Q_CAP.ln();
    if !beta.is_finite() || beta - reach <= beta_min {
        return Err(Error::BetaStepOutOfRange {
            beta,
            step: scheme.base_step,
        });
    }
    let x = cfg.x().to_vec();
    let y = cfg.y().to_vec();
    let tail = p.tail_eps();
    let mut eval = |delta: f64| -> Result<f64> {
        let pd = ModulusParams::from_beta_with_tail(beta + delta, tail)?;
        re_log_g_raw(&x, &y, g, &pd)
    };
    let (d1, _) = stencil_d1_d2(&mut eval, scheme)?;
    Ok(d1)
}

/// Scale for judging an oracle-vs-engine comparison: the largest
/// single-pair contribution entering either side.
pub fn comparison_scale(cfg: &Configuration, g: &GeneralCoupling, p: &ModulusParams) -> f64 {
    let lam = g
        .lambda1
        .abs()
        .max(g.lambda2.abs())
        .max(g.lambda3.abs())
        .max(1.0);
    let mut worst: f64 = 1.0;
    let all: Vec<f64> = cfg.x().iter().chain(cfg.y().iter()).copied().collect();
    for (i, &a) in all.iter().enumerate() {
        for &b in &all[..i] {
            if let Ok(v) = potential_v(a - b, p) {
                worst = worst.max(lam * lam * v.value.abs());
            }
            if let Ok(ph) = elliptic::phi(a - b, p) {
                worst = worst.max(lam * lam * ph.value * ph.value);
            }
        }
    }
    worst
}
