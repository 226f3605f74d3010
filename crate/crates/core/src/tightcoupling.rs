//! Tight-coupling condition for colinear arrays.
//!
//! Under uniform excitation, an interior element of an infinite colinear
//! array sees zero net reactance when
//!
//! ```text
//! (delta/a)^3 / 3 = Li3(e^-jx) + Li3(e^jx) + j x (Li2(e^-jx) - Li2(e^jx)),
//! x = k0 delta
//! ```
//!
//! which in the quasi-continuous limit `x -> 0` collapses to
//! `(delta/a)^3 = 6 zeta(3)`, i.e. an optimum spacing-to-antenna-size ratio
//! `(6 zeta(3))^(1/3) ~= 1.932`. This module evaluates the reactance
//! residual for finite and infinite arrays (partial sums vs the closed
//! polylogarithm form), locates its root, and hosts the special functions.
//!
//! Polylogarithms are only ever needed on the unit circle. They are
//! evaluated by the expansion of `Li_n(e^mu)` about `mu = 0` with the
//! logarithmic singularity split off, which keeps the series accurate
//! through `x -> 0` where the direct series stalls:
//!
//! ```text
//! Li_n(e^mu) = mu^(n-1)/(n-1)! (H_(n-1) - ln(-mu))
//!            + sum_{k != n-1} zeta(n-k) mu^k / k!,     |mu| < 2 pi
//! ```

use num_complex::Complex64;
use std::sync::OnceLock;

use crate::{Error, Result};

/// Search interval for the spacing-to-antenna-size ratio.
pub const RATIO_SEARCH_RANGE: (f64, f64) = (4.0 / 3.0, 4.0);

/// Riemann zeta at 3, to better than 1e-15 relative.
///
/// Uses the central binomial series
/// `zeta(3) = 5/2 sum_{n>=1} (-1)^(n-1) / (n^3 C(2n, n))`, which converges
/// geometrically.
pub fn zeta3() -> f64 {
    let mut sum = 0.0;
    let mut binom = 2.0; // C(2n, n) at n = 1
    let mut sign = 1.0;
    for n in 1..=60u32 {
        let nf = n as f64;
        sum += sign / (nf * nf * nf * binom);
        binom *= 2.0 * (2.0 * nf + 1.0) / (nf + 1.0);
        sign = -sign;
    }
    2.5 * sum
}

/// Riemann zeta at an integer argument `s >= 2`, via direct summation with
/// an Euler-Maclaurin tail.
fn zeta_pos(s: u32) -> f64 {
    debug_assert!(s >= 2);
    if s == 2 {
        return std::f64::consts::PI * std::f64::consts::PI / 6.0;
    }
    if s == 3 {
        return zeta3();
    }
    let n = 2000u32;
    let sf = s as f64;
    let mut sum = 0.0;
    for k in 1..=n {
        let term = (k as f64).powi(-(s as i32));
        sum += term;
        if term < 1e-320 {
            break;
        }
    }
    let nf = n as f64;
    // Euler-Maclaurin tail: int + 1/2 f(N) ... using f(x) = x^-s
    let tail = nf.powf(1.0 - sf) / (sf - 1.0) - 0.5 * nf.powf(-sf)
        + sf / 12.0 * nf.powf(-sf - 1.0)
        - sf * (sf + 1.0) * (sf + 2.0) / 720.0 * nf.powf(-sf - 3.0);
    sum + tail
}

/// Bernoulli numbers `B_{2m}` for `m = 1..=64`, from
/// `B_{2m} = (-1)^(m+1) 2 (2m)! zeta(2m) / (2 pi)^(2m)`.
fn bernoulli_even() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(64);
        let mut factorial = 1.0f64; // (2m)!
        let two_pi = 2.0 * std::f64::consts::PI;
        for m in 1..=64u32 {
            let two_m = 2 * m;
            factorial *= (two_m - 1) as f64;
            factorial *= two_m as f64;
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            table.push(sign * 2.0 * factorial * zeta_pos(two_m) / two_pi.powi(two_m as i32));
        }
        table
    })
}

/// Riemann zeta at any integer except 1.
fn zeta_int(j: i64) -> f64 {
    match j {
        j if j >= 2 => zeta_pos(j as u32),
        0 => -0.5,
        j if j < 0 && (-j) % 2 == 0 => 0.0, // negative even integers are trivial zeros
        j => {
            // j negative odd: zeta(-(2m-1)) = -B_{2m}/(2m)
            let two_m = (1 - j) as usize;
            -bernoulli_even()[two_m / 2 - 1] / two_m as f64
        }
    }
}

/// Polylogarithm `Li_s(z)` of order `s` in {2, 3} for `z` on the unit
/// circle, to about 1e-14 absolute.
pub fn polylog(order: u32, z: Complex64) -> Result<Complex64> {
    if order != 2 && order != 3 {
        return Err(Error::Domain(format!("polylog order must be 2 or 3, got {order}")));
    }
    if ((z.norm() - 1.0).abs()) > 1e-12 {
        return Err(Error::Domain(format!(
            "polylog argument must lie on the unit circle, |z| = {:.15}",
            z.norm()
        )));
    }
    let x = z.arg();
    if x < 0.0 {
        return Ok(polylog_circle(order, -x).conj());
    }
    Ok(polylog_circle(order, x))
}

/// `Li_n(e^{jx})` for `x` in [0, pi].
fn polylog_circle(n: u32, x: f64) -> Complex64 {
    if x == 0.0 {
        return Complex64::new(zeta_pos(n), 0.0);
    }
    let mu = Complex64::new(0.0, x);
    // ln(-mu) = ln(x) - j pi/2 for x > 0 (principal branch)
    let ln_neg_mu = Complex64::new(x.ln(), -std::f64::consts::FRAC_PI_2);
    let (harmonic, factorial_nm1) = match n {
        2 => (1.0, 1.0),
        _ => (1.5, 2.0),
    };
    let singular = mu.powu(n - 1) / factorial_nm1 * (Complex64::new(harmonic, 0.0) - ln_neg_mu);

    let mut acc = singular;
    let mut mu_pow = Complex64::new(1.0, 0.0);
    let mut k_factorial = 1.0f64;
    let mut small_streak = 0;
    for k in 0..=120u32 {
        if k > 0 {
            mu_pow *= mu;
            k_factorial *= k as f64;
        }
        if k == n - 1 {
            continue;
        }
        let coeff = zeta_int(n as i64 - k as i64);
        if coeff == 0.0 {
            continue;
        }
        let term = mu_pow * (coeff / k_factorial);
        acc += term;
        if term.norm() < 1e-18 * acc.norm().max(1e-30) {
            small_streak += 1;
            if small_streak >= 3 {
                break;
            }
        } else {
            small_streak = 0;
        }
    }
    acc
}

/// Array extent for the reactance sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayExtent {
    /// A ULA with this element count; the sum runs over `l = 1..=N-1`,
    /// symmetrized (x2) like the interior element of the infinite array.
    Finite(usize),
    /// The closed polylogarithm form of the infinite sum.
    Infinite,
}

/// Net reactance of an interior colinear array element under uniform
/// excitation, normalized by the self-reactance magnitude.
///
/// With `ka = k0 delta / ratio` and
/// `S = 2 sum_l [cos(x l)/(x l)^3 + sin(x l)/(x l)^2]` (or its closed
/// polylog form), the raw condition `Im{Z_self} + sum Im{Z_mutual} = 0`
/// rescales to `3 (ka)^3 S - 1 = 0`; this function returns that residual.
/// Positive below the tight-coupling ratio, negative above it.
pub fn colinear_reactance_residual(ratio: f64, k0_delta: f64, extent: ArrayExtent) -> Result<f64> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::Domain(format!("ratio must be positive, got {ratio:e}")));
    }
    if !(k0_delta > 0.0) || !k0_delta.is_finite() {
        return Err(Error::Domain(format!("k0*delta must be positive, got {k0_delta:e}")));
    }
    let x = k0_delta;
    let s = match extent {
        ArrayExtent::Finite(count) => {
            if count == 0 {
                return Err(Error::Validation("array count must be at least 1".into()));
            }
            let mut sum = 0.0;
            for l in 1..count {
                let xl = x * l as f64;
                sum += xl.cos() / xl.powi(3) + xl.sin() / xl.powi(2);
            }
            2.0 * sum
        }
        ArrayExtent::Infinite => {
            let li3 = polylog(3, Complex64::from_polar(1.0, x))?;
            let li2 = polylog(2, Complex64::from_polar(1.0, x))?;
            // Li3(e^-jx) + Li3(e^jx) = 2 Re Li3; j (Li2(e^-jx) - Li2(e^jx)) = 2 Im Li2
            (2.0 * li3.re) / x.powi(3) + (2.0 * li2.im) / x.powi(2)
        }
    };
    let ka = x / ratio;
    Ok(3.0 * ka.powi(3) * s - 1.0)
}

/// The asymptotic optimum spacing-to-antenna-size ratio `(6 zeta(3))^(1/3)`.
pub fn asymptotic_ratio() -> f64 {
    (6.0 * zeta3()).cbrt()
}

/// Root of the reactance residual over the ratio search range, via a
/// 64-interval sign scan followed by bisection.
pub fn tight_coupling_root(k0_delta: f64, extent: ArrayExtent) -> Result<f64> {
    let (lo, hi) = RATIO_SEARCH_RANGE;
    let scan = 64usize;
    let residual = |ratio: f64| colinear_reactance_residual(ratio, k0_delta, extent);
    let mut prev_ratio = lo;
    let mut prev_value = residual(lo)?;
    let mut bracket = None;
    for i in 1..=scan {
        let ratio = lo + (hi - lo) * i as f64 / scan as f64;
        let value = residual(ratio)?;
        if prev_value == 0.0 {
            return Ok(prev_ratio);
        }
        if prev_value.signum() != value.signum() {
            bracket = Some((prev_ratio, ratio));
            break;
        }
        prev_ratio = ratio;
        prev_value = value;
    }
    let (mut a, mut b) = bracket.ok_or_else(|| {
        Error::Domain(format!(
            "reactance residual has no sign change on [{lo:.4}, {hi:.4}] at k0*delta = {k0_delta:e}"
        ))
    })?;
    let mut fa = residual(a)?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = residual(mid)?;
        if fm == 0.0 || (b - a) < 1e-14 {
            return Ok(mid);
        }
        if fa.signum() == fm.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Tight-coupling summary: the analytic constant, finite-array reactance
/// roots, and (when computed) the rate-sweep optimum per element count.
#[derive(Debug, Clone)]
pub struct TightCouplingReport {
    pub asymptotic_ratio: f64,
    /// `(N, ratio)` roots of the finite-array reactance residual.
    pub finite_roots: Vec<(usize, f64)>,
    /// `(N, ratio)` argmax of the achievable rate over the ratio sweep.
    pub sweep_optimum: Vec<(usize, f64)>,
}

/// Argmax of `rate_fn(count, ratio)` over the ratio grid, per count.
///
/// Ratios must lie within the search range; evaluation order is
/// deterministic.
pub fn optimum_ratio_sweep(
    ratios: &[f64],
    counts: &[usize],
    rate_fn: impl Fn(usize, f64) -> f64 + Sync,
) -> Result<Vec<(usize, f64)>> {
    if ratios.is_empty() || counts.is_empty() {
        return Err(Error::Validation("ratio sweep needs non-empty axes".into()));
    }
    let (lo, hi) = RATIO_SEARCH_RANGE;
    for &r in ratios {
        if r < lo - 1e-12 || r > hi + 1e-12 {
            return Err(Error::Validation(format!(
                "ratio {r:.6} outside the sweep range [{lo:.4}, {hi:.4}]"
            )));
        }
    }
    Ok(counts
        .iter()
        .map(|&n| {
            let best = ratios
                .iter()
                .map(|&r| (r, rate_fn(n, r)))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(r, _)| r)
                .unwrap();
            (n, best)
        })
        .collect())
}
