//! Scalar building blocks: the odd elliptic function theta, its logarithmic
//! derivatives, the periodic pair potential V, the auxiliary combination f
//! and the q-series constants they share.
//!
//! Everything is a truncated q-series or q-product controlled by one
//! [`ModulusParams`] value, and every evaluation reports a rigorous bound on
//! the discarded tail. At `q = 0` all formulas collapse to closed
//! trigonometric expressions with zero tail.

use crate::error::{Error, Result};
use crate::modulus::{ModulusParams, SeriesValue, POLE_EPS};
use num_complex::Complex64;

/// Shared partial sums of the product representation
///
/// ```text
/// theta(z) = sin(z/2) * prod_{n>=1} (1 - 2 q^(2n) cos z + q^(4n))
/// ```
///
/// and of the series for its z- and beta-logarithmic derivatives. One pass
/// over n = 1..n_max produces all of them; the individual public functions
/// add the appropriate prefactors and tail bounds.
struct Kernel {
    /// sin(z/2)
    sin_half: f64,
    /// cos(z/2)
    cos_half: f64,
    /// Product of the elliptic factors 1 - 2 q^(2n) cos z + q^(4n).
    product: f64,
    /// sum_n 2 q^(2n) sin z / D_n, the series part of phi = (log theta)'.
    phi_sum: f64,
    /// sum_n (log D_n)'', the series part of -V.
    v_sum: f64,
    /// sum_n 2 n q^(2n) (cos z - q^(2n)) / D_n = d(log theta)/d(beta).
    dlt_sum: f64,
}

fn kernel(z: f64, p: &ModulusParams) -> Kernel {
    let sin_half = (0.5 * z).sin();
    let cos_half = (0.5 * z).cos();
    let sz = z.sin();
    let cz = z.cos();
    let q2 = p.q2();
    let mut product = 1.0;
    let mut phi_sum = 0.0;
    let mut v_sum = 0.0;
    let mut dlt_sum = 0.0;
    let mut a = q2;
    for n in 1..=p.n_max() {
        // 1 - 2a cos z + a^2 rearranged as a sum of nonnegative terms.
        let d = (1.0 - a) * (1.0 - a) + 2.0 * a * (1.0 - cz);
        let t = 2.0 * a * sz / d;
        product *= d;
        phi_sum += t;
        v_sum += 2.0 * a * cz / d - t * t;
        dlt_sum += 2.0 * n as f64 * a * (cz - a) / d;
        a *= q2;
    }
    Kernel {
        sin_half,
        cos_half,
        product,
        phi_sum,
        v_sum,
        dlt_sum,
    }
}

/// Minimum of the elliptic factors, (1 - q^2)^2, used in tail bounds.
fn d_min(p: &ModulusParams) -> f64 {
    let r = 1.0 - p.q2();
    r * r
}

pub(crate) fn guard_pole(z: f64, theta_abs: f64) -> Result<()> {
    if theta_abs <= POLE_EPS {
        Err(Error::NearPole {
            arg: z,
            theta_abs,
            pole_eps: POLE_EPS,
        })
    } else {
        Ok(())
    }
}

/// The odd 2pi-antiperiodic elliptic function
///
/// ```text
/// theta(z) = sin(z/2) * prod_{n>=1} (1 - 2 q^(2n) cos z + q^(4n)).
/// ```
///
/// Real zeros sit exactly at z = 0 mod 2pi. At q = 0 this is sin(z/2).
pub fn theta(z: f64, p: &ModulusParams) -> SeriesValue {
    let k = kernel(z, p);
    let value = k.sin_half * k.product;
    if p.q() == 0.0 {
        return SeriesValue::exact(value);
    }
    let tail = value.abs() * (2.0 * p.geometric_tail() / (1.0 - p.q2())).exp_m1();
    SeriesValue::new(value, tail)
}

/// `theta` continued into the strip |Im z| <= STRIP_FRACTION * beta.
///
/// The factors decay like (q^2 exp|Im z|)^n, so the truncation order is
/// recomputed from that effective ratio rather than taken from `p`.
pub fn theta_complex(z: Complex64, p: &ModulusParams) -> Result<SeriesValue<Complex64>> {
    let limit = p.strip_limit();
    if z.im.is_nan() || z.im.abs() > limit {
        return Err(Error::OutsideStrip { im: z.im, limit });
    }
    let half = (0.5 * z).sin();
    if p.q() == 0.0 {
        return Ok(SeriesValue::exact(half));
    }
    let growth = z.im.abs().exp();
    let rho = p.q2() * growth;
    let mut n_eff = p.n_max();
    {
        // Smallest n with rho^(n+1)/(1-rho) below the tail tolerance.
        let bound = p.tail_eps() * (1.0 - rho);
        let mut n = ((bound.ln() / rho.ln()).floor() as i64 + 1).max(1) as usize;
        while rho.powi(n as i32) >= bound {
            n += 1;
        }
        n_eff = n_eff.max(n);
    }
    let cz = z.cos();
    let mut product = Complex64::new(1.0, 0.0);
    let mut a = p.q2();
    for _ in 1..=n_eff {
        product *= 1.0 - 2.0 * a * cz + a * a;
        a *= p.q2();
    }
    let value = half * product;
    let tail_ratio = rho.powi(n_eff as i32 + 1) / (1.0 - rho);
    let tail = value.norm() * (3.0 * tail_ratio / 0.7).exp_m1();
    Ok(SeriesValue::new(value, tail))
}

/// Sine series of the first Jacobi theta function with the leading q^(1/4)
/// factored out:
///
/// ```text
/// vartheta1(u) = sum_{n>=1} (-1)^(n-1) q^(n(n-1)) sin((2n-1) u).
/// ```
///
/// The ratio theta(z) / vartheta1(z/2) is independent of z; it equals the
/// partition product `partition_z`. At q = 0 the series is sin(u).
pub fn vartheta1(u: f64, p: &ModulusParams) -> SeriesValue {
    let q2 = p.q2();
    let mut value = 0.0;
    let mut a = 1.0; // q^(n(n-1))
    let mut ratio = 1.0; // q^(2n), the step a -> a * q^(2n)
    let mut sign = 1.0;
    let mut n = 1usize;
    loop {
        value += sign * a * ((2 * n as i64 - 1) as f64 * u).sin();
        ratio *= q2;
        a *= ratio;
        sign = -sign;
        n += 1;
        if a < p.tail_eps() || n > 2 * p.n_max() + 4 {
            break;
        }
    }
    let tail = if q2 == 0.0 { 0.0 } else { a / (1.0 - q2) };
    SeriesValue::new(value, tail)
}

/// Logarithmic derivative phi(z) = theta'(z)/theta(z),
///
/// ```text
/// phi(z) = (1/2) cot(z/2) + sum_{n>=1} 2 q^(2n) sin z / D_n(z),
/// D_n(z) = 1 - 2 q^(2n) cos z + q^(4n).
/// ```
///
/// Odd and 2pi-periodic, with poles at the zeros of theta.
pub fn phi(z: f64, p: &ModulusParams) -> Result<SeriesValue> {
    let k = kernel(z, p);
    guard_pole(z, (k.sin_half * k.product).abs())?;
    let value = 0.5 * k.cos_half / k.sin_half + k.phi_sum;
    let tail = 2.0 * p.geometric_tail() / d_min(p);
    Ok(SeriesValue::new(value, tail))
}

/// Periodic two-body potential V(z) = -phi'(z),
///
/// ```text
/// V(z) = 1 / (4 sin^2(z/2)) - sum_{n>=1} (log D_n)''(z),
/// (log D_n)'' = 2 q^(2n) cos z / D_n - (2 q^(2n) sin z / D_n)^2.
/// ```
///
/// Even, 2pi-periodic, with double poles at the zeros of theta. This is the
/// production evaluation path; `potential_v_images` sums the defining
/// sequence of periodic images instead and serves as a cross-check.
pub fn potential_v(z: f64, p: &ModulusParams) -> Result<SeriesValue> {
    let k = kernel(z, p);
    guard_pole(z, (k.sin_half * k.product).abs())?;
    let value = 0.25 / (k.sin_half * k.sin_half) - k.v_sum;
    let dm = d_min(p);
    let a = p.geometric_tail();
    let tail = 2.0 * a / dm + 4.0 * p.q2() * a / (dm * dm);
    Ok(SeriesValue::new(value, tail))
}

/// The same potential summed over periodic images in the imaginary
/// direction,
///
/// ```text
/// V(z) = 1/(4 sin^2(z/2))
///      + sum_{m>=1} 2 Re [ 1 / (4 sin^2((z + i beta m)/2)) ].
/// ```
///
/// Slowly convergent compared to `potential_v`; kept as an independent
/// evaluation route for self-tests.
pub fn potential_v_images(z: f64, p: &ModulusParams) -> Result<SeriesValue> {
    let s = (0.5 * z).sin();
    let c = (0.5 * z).cos();
    let k = kernel(z, p);
    guard_pole(z, (s * k.product).abs())?;
    let mut value = 0.25 / (s * s);
    if p.q() > 0.0 {
        let beta = p.beta();
        for m in 1..=p.n_max() {
            let arg = 0.5 * beta * m as f64;
            if arg > 350.0 {
                break;
            }
            // Re[1/(4 sin^2 w)] for w = z/2 + i arg, with cosh^2 factored
            // out so nothing overflows: sin w = s cosh + i c sinh.
            let th = arg.tanh();
            let ch = arg.cosh();
            let num = s * s - c * c * th * th;
            let den = s * s + c * c * th * th;
            value += 2.0 * num / (4.0 * ch * ch * den * den);
        }
    }
    let tail = 2.0 * p.geometric_tail() / d_min(p);
    Ok(SeriesValue::new(value, tail))
}

/// The combination
///
/// ```text
/// f(z) = (1/2) [ V(z) - phi(z)^2 - c0 ]
/// ```
///
/// entering every reduced operator identity. Even and 2pi-periodic. At
/// q = 0 it degenerates to the constant 1/12.
pub fn f_func(z: f64, p: &ModulusParams) -> Result<SeriesValue> {
    let c0 = const_c0(p);
    let k = kernel(z, p);
    guard_pole(z, (k.sin_half * k.product).abs())?;
    let phi_val = 0.5 * k.cos_half / k.sin_half + k.phi_sum;
    let v_val = 0.25 / (k.sin_half * k.sin_half) - k.v_sum;
    let value = 0.5 * (v_val - phi_val * phi_val - c0.value);
    let dm = d_min(p);
    let a = p.geometric_tail();
    let tail_phi = 2.0 * a / dm;
    let tail_v = 2.0 * a / dm + 4.0 * p.q2() * a / (dm * dm);
    let tail = 0.5 * (tail_v + 2.0 * phi_val.abs() * tail_phi + tail_phi * tail_phi + c0.tail_bound);
    Ok(SeriesValue::new(value, tail))
}

/// Derivative of log theta(z) with respect to the inverse temperature,
///
/// ```text
/// d(log theta)/d(beta) = sum_{n>=1} 2 n q^(2n) (cos z - q^(2n)) / D_n(z).
/// ```
///
/// Regular everywhere on the real line (theta and its beta-derivative
/// vanish together), even in z, and identically 0 at q = 0.
pub fn dbeta_log_theta(z: f64, p: &ModulusParams) -> SeriesValue {
    let k = kernel(z, p);
    let value = k.dlt_sum;
    if p.q() == 0.0 {
        return SeriesValue::exact(value);
    }
    let a = p.geometric_tail();
    let tail = 4.0 * (p.n_max() as f64 + 1.0) * a / ((1.0 - p.q2()) * d_min(p));
    SeriesValue::new(value, tail)
}

/// Constant term of the potential's Fourier expansion,
///
/// ```text
/// c0 = 1/12 - sum_{n>=1} 2 q^(2n) / (1 - q^(2n))^2.
/// ```
pub fn const_c0(p: &ModulusParams) -> SeriesValue {
    let q2 = p.q2();
    let mut sum = 0.0;
    let mut a = q2;
    for _ in 1..=p.n_max() {
        let r = 1.0 - a;
        sum += 2.0 * a / (r * r);
        a *= q2;
    }
    let tail = if q2 == 0.0 {
        0.0
    } else {
        2.0 * p.geometric_tail() / d_min(p)
    };
    SeriesValue::new(1.0 / 12.0 - sum, tail)
}

/// The beta-flow constant c1. Exactly 1/12 for every modulus; see
/// `const_c1_series` for the series route to the same number.
pub fn const_c1() -> f64 {
    1.0 / 12.0
}

/// Series form of c1,
///
/// ```text
/// c1 = 1/8 - sum_{n>=1} n q^(2n) / (1 - q^(2n)) - c0 / 2,
/// ```
///
/// which collapses to 1/12 once the two Lambert-type sums are identified.
pub fn const_c1_series(p: &ModulusParams) -> SeriesValue {
    let c2 = const_c2(p);
    let c0 = const_c0(p);
    SeriesValue::new(
        0.125 - c2.value - 0.5 * c0.value,
        c2.tail_bound + 0.5 * c0.tail_bound,
    )
}

/// Lambert-type sum
///
/// ```text
/// c2 = sum_{n>=1} n q^(2n) / (1 - q^(2n)),
/// ```
///
/// the beta-derivative of -log(partition_z).
pub fn const_c2(p: &ModulusParams) -> SeriesValue {
    let q2 = p.q2();
    let mut sum = 0.0;
    let mut a = q2;
    for n in 1..=p.n_max() {
        sum += n as f64 * a / (1.0 - a);
        a *= q2;
    }
    let tail = if q2 == 0.0 {
        0.0
    } else {
        (p.n_max() as f64 + 1.0) * p.geometric_tail() / ((1.0 - q2) * (1.0 - q2))
    };
    SeriesValue::new(sum, tail)
}

/// The rearrangement of `const_c2` as
///
/// ```text
/// sum_{m>=1} q^(2m) / (1 - q^(2m))^2,
/// ```
///
/// equal to it term-for-term after expanding the geometric denominators.
/// Evaluated independently so the equality stays a nontrivial check.
pub fn const_c2_dual(p: &ModulusParams) -> SeriesValue {
    let q2 = p.q2();
    let mut sum = 0.0;
    let mut a = q2;
    for _ in 1..=p.n_max() {
        let r = 1.0 - a;
        sum += a / (r * r);
        a *= q2;
    }
    let tail = if q2 == 0.0 {
        0.0
    } else {
        p.geometric_tail() / d_min(p)
    };
    SeriesValue::new(sum, tail)
}

/// Partition product
///
/// ```text
/// Z = prod_{n>=1} 1 / (1 - q^(2n)),
/// ```
///
/// also the constant ratio theta(z) / vartheta1(z/2).
pub fn partition_z(p: &ModulusParams) -> SeriesValue {
    let q2 = p.q2();
    let mut value = 1.0;
    let mut a = q2;
    for _ in 1..=p.n_max() {
        value /= 1.0 - a;
        a *= q2;
    }
    let tail = if q2 == 0.0 {
        0.0
    } else {
        value * (p.geometric_tail() / (1.0 - q2)).exp_m1()
    };
    SeriesValue::new(value, tail)
}

/// Everything the many-body engine needs about one pairwise difference,
/// computed in a single kernel pass: log|theta|, the sign of theta, phi, V,
/// f and the beta-derivative of log theta.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairValues {
    pub log_abs_theta: f64,
    pub theta_negative: bool,
    pub phi: f64,
    pub v: f64,
    pub f: f64,
    pub dlt: f64,
}

pub(crate) fn pair_values(d: f64, p: &ModulusParams, c0: f64) -> Result<PairValues> {
    let k = kernel(d, p);
    let theta_val = k.sin_half * k.product;
    guard_pole(d, theta_val.abs())?;
    let phi = 0.5 * k.cos_half / k.sin_half + k.phi_sum;
    let v = 0.25 / (k.sin_half * k.sin_half) - k.v_sum;
    Ok(PairValues {
        log_abs_theta: theta_val.abs().ln(),
        theta_negative: theta_val < 0.0,
        phi,
        v,
        f: 0.5 * (v - phi * phi - c0),
        dlt: k.dlt_sum,
    })
}
