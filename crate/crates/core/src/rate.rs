//! Achievable-rate evaluation: whitened eigenmodes, water-filling over
//! frequency, band-restricted rate integration, and beamforming SNR.
//!
//! The rate of a channel realization is driven by the eigenvalues
//! `lambda_r(f)` of `H^H R_n^-1 H` [Hz/V^2]. Under a total budget `B`
//! [V^2, generator-voltage domain] the optimum allocation is water-filling,
//!
//! ```text
//! P_r(f) = max(0, 1/nu - 1/lambda_r(f))      sum_r int P_r(f) df = B
//! C      = sum_r int log2(1 + P_r(f) lambda_r(f)) df     [bits/s]
//! ```
//!
//! with `nu` found by bisection on the monotone decreasing power-vs-`nu`
//! map. Integrals are composite trapezoid sums over an explicit frequency
//! grid, restricted to the configured bands.

use num_complex::Complex64;

use crate::network::ChannelRealization;
use crate::{Error, Result};

/// Default carrier-aggregation bands [Hz]: 680-720 MHz, 2.45-2.55 GHz,
/// 24.9-25.1 GHz.
pub const DEFAULT_BANDS: [(f64, f64); 3] =
    [(680e6, 720e6), (2.45e9, 2.55e9), (24.9e9, 25.1e9)];

/// A quadrature grid over frequency: strictly increasing points [Hz] with
/// positive trapezoid weights [Hz] summing to the covered bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl FrequencyGrid {
    /// Builds a grid from explicit points and weights.
    pub fn from_points(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::Validation(
                "grid needs equally many (and at least one) points and weights".into(),
            ));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("grid points must be strictly increasing".into()));
        }
        if points[0] <= 0.0 || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Validation("grid points and weights must be positive".into()));
        }
        Ok(Self { points, weights })
    }

    /// Uniform grid on `[lo, hi]` with composite trapezoid weights.
    pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let points = spaced(lo, hi, n, false)?;
        let weights = trapezoid_weights(&points);
        Self::from_points(points, weights)
    }

    /// Log-spaced grid on `[lo, hi]` with trapezoid weights on the actual
    /// (non-uniform) points.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let points = spaced(lo, hi, n, true)?;
        let weights = trapezoid_weights(&points);
        Self::from_points(points, weights)
    }

    /// Concatenated per-band linear grids.
    pub fn from_bands(bands: &BandSet, points_per_band: usize) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(lo, hi) in bands.bands() {
            let band = Self::linear(lo, hi, points_per_band)?;
            points.extend_from_slice(&band.points);
            weights.extend_from_slice(&band.weights);
        }
        Self::from_points(points, weights)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total covered bandwidth [Hz].
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn spaced(lo: f64, hi: f64, n: usize, log: bool) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::Validation(format!("bad interval [{lo:e}, {hi:e}]")));
    }
    if n < 2 {
        return Err(Error::Validation("grid needs at least 2 points".into()));
    }
    let pts = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log { lo * (hi / lo).powf(t) } else { lo + (hi - lo) * t }
        })
        .collect();
    Ok(pts)
}

fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { points[0] } else { points[i - 1] };
            let right = if i == n - 1 { points[n - 1] } else { points[i + 1] };
            (right - left) / 2.0
        })
        .collect()
}

/// An ascending, non-overlapping set of frequency bands [Hz].
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    bands: Vec<(f64, f64)>,
}

impl BandSet {
    pub fn new(bands: Vec<(f64, f64)>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::Validation("band set must be non-empty".into()));
        }
        for &(lo, hi) in &bands {
            if !(lo > 0.0) || !(hi > lo) {
                return Err(Error::Validation(format!("bad band [{lo:e}, {hi:e}]")));
            }
        }
        if bands.windows(2).any(|w| w[1].0 <= w[0].1) {
            return Err(Error::Validation("bands must be ascending and non-overlapping".into()));
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[(f64, f64)] {
        &self.bands
    }

    /// Sum of band widths [Hz].
    pub fn total_bandwidth(&self) -> f64 {
        self.bands.iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn contains(&self, f: f64) -> bool {
        self.bands.iter().any(|&(lo, hi)| f >= lo && f <= hi)
    }
}

impl Default for BandSet {
    fn default() -> Self {
        Self { bands: DEFAULT_BANDS.to_vec() }
    }
}

/// Whitened eigenvalues per grid point, each list descending.
#[derive(Debug, Clone)]
pub struct LambdaField {
    pub grid: FrequencyGrid,
    pub modes: Vec<Vec<f64>>,
}

impl LambdaField {
    pub fn new(grid: FrequencyGrid, modes: Vec<Vec<f64>>) -> Result<Self> {
        if modes.len() != grid.len() {
            return Err(Error::Validation(format!(
                "lambda field has {} mode lists for {} grid points",
                modes.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, modes })
    }

    /// Largest eigenvalue anywhere on the grid.
    pub fn max_lambda(&self) -> f64 {
        self.modes
            .iter()
            .flat_map(|m| m.iter().copied())
            .fold(0.0_f64, f64::max)
    }
}

/// Per-frequency allocation record.
#[derive(Debug, Clone)]
pub struct RatePoint {
    pub frequency: f64,
    /// Descending whitened eigenvalues [Hz/V^2].
    pub eigenvalues: Vec<f64>,
    /// Allocated voltage PSDs [V^2/Hz], aligned with `eigenvalues`.
    pub powers: Vec<f64>,
}

/// Outcome of a rate evaluation.
#[derive(Debug, Clone)]
pub struct RateResult {
    /// Integrated rate [bits/s].
    pub total_rate: f64,
    /// Water level `nu` [Hz/V^2] for the optimum allocation, `None` for
    /// uniform allocation or an all-zero field.
    pub water_level: Option<f64>,
    /// Per-grid-point eigenvalues and powers.
    pub per_point: Vec<RatePoint>,
    /// Total allocated budget `sum_f w_f sum_r P_r(f)` [V^2].
    pub power_spent: f64,
}

/// Power allocation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precoding {
    Optimum,
    Uniform,
}

impl Precoding {
    pub fn name(&self) -> &'static str {
        match self {
            Precoding::Optimum => "optimum",
            Precoding::Uniform => "uniform",
        }
    }
}

/// Descending, non-negative eigenvalues of the Hermitian-symmetrized
/// `H^H R_n^-1 H` [Hz/V^2]; length equals the transmit dimension N.
///
/// Computed through the Gram matrix of the whitened channel `L^-1 H`
/// (`R_n = L L^H`), which has the same nonzero spectrum.
pub fn whitened_eigenmodes(real: &ChannelRealization) -> Result<Vec<f64>> {
    let m = real.h.nrows();
    let n = real.h.ncols();
    if real.h.iter().all(|z| z.norm_sqr() == 0.0) {
        return Ok(vec![0.0; n]);
    }
    let chol = real.r_n.clone().cholesky().ok_or_else(|| Error::Singular {
        context: "noise covariance Cholesky (cannot whiten)".to_string(),
        condition: f64::INFINITY,
    })?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&real.h)
        .ok_or_else(|| Error::Singular {
            context: "noise whitening triangular solve".to_string(),
            condition: f64::INFINITY,
        })?;
    let gram = if m <= n { &y * y.adjoint() } else { y.adjoint() * &y };
    let gram = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = gram.symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    let mut lams = Vec::with_capacity(n);
    for &lam in eig.eigenvalues.iter() {
        if lam < -1e-10 * lam_max {
            return Err(Error::Inconsistent(format!(
                "whitened spectrum has eigenvalue {lam:.6e} (max {lam_max:.6e})"
            )));
        }
        lams.push(lam.max(0.0));
    }
    lams.resize(n.max(lams.len()), 0.0);
    lams.truncate(n);
    lams.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(lams)
}

/// Water-filling over the eigenvalue field under total budget `budget`
/// [V^2]. An all-zero field yields a zero-capacity result.
pub fn waterfill(field: &LambdaField, budget: f64) -> Result<RateResult> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::Domain(format!("power budget must be positive, got {budget:e}")));
    }
    let lam_max = field.max_lambda();
    if lam_max <= 0.0 {
        return Ok(zero_capacity(field));
    }

    let spent_at = |nu: f64| -> f64 {
        field
            .modes
            .iter()
            .zip(field.grid.weights())
            .map(|(lams, &w)| {
                w * lams
                    .iter()
                    .filter(|&&lam| lam > nu)
                    .map(|&lam| 1.0 / nu - 1.0 / lam)
                    .sum::<f64>()
            })
            .sum()
    };

    let mut nu_hi = lam_max;
    let mut nu_lo = lam_max * 1e-18;
    // widen the bracket for extreme budgets
    let mut guard = 0;
    while spent_at(nu_lo) < budget && guard < 40 {
        nu_lo *= 1e-3;
        guard += 1;
    }
    let mut nu = (nu_lo * nu_hi).sqrt();
    for _ in 0..200 {
        nu = (nu_lo * nu_hi).sqrt();
        let spent = spent_at(nu);
        if ((spent - budget) / budget).abs() <= 1e-12 {
            break;
        }
        if spent > budget {
            nu_lo = nu;
        } else {
            nu_hi = nu;
        }
    }

    let mut per_point = Vec::with_capacity(field.grid.len());
    let mut total_rate = 0.0;
    let mut power_spent = 0.0;
    for ((lams, &w), &f) in field
        .modes
        .iter()
        .zip(field.grid.weights())
        .zip(field.grid.points())
    {
        let powers: Vec<f64> = lams
            .iter()
            .map(|&lam| if lam > nu { 1.0 / nu - 1.0 / lam } else { 0.0 })
            .collect();
        for (&p, &lam) in powers.iter().zip(lams.iter()) {
            if p > 0.0 {
                total_rate += w * (1.0 + p * lam).log2();
                power_spent += w * p;
            }
        }
        per_point.push(RatePoint { frequency: f, eigenvalues: lams.clone(), powers });
    }
    Ok(RateResult { total_rate, water_level: Some(nu), per_point, power_spent })
}

fn zero_capacity(field: &LambdaField) -> RateResult {
    let per_point = field
        .modes
        .iter()
        .zip(field.grid.points())
        .map(|(lams, &f)| RatePoint {
            frequency: f,
            eigenvalues: lams.clone(),
            powers: vec![0.0; lams.len()],
        })
        .collect();
    RateResult { total_rate: 0.0, water_level: None, per_point, power_spent: 0.0 }
}

/// Rate under the selected allocation strategy.
///
/// `Optimum` water-fills the whole field; `Uniform` spreads the budget
/// evenly over the active mode count and the covered bandwidth,
/// `P = budget / (R_active * total bandwidth)`.
pub fn achievable_rate(field: &LambdaField, budget: f64, precoding: Precoding) -> Result<RateResult> {
    match precoding {
        Precoding::Optimum => waterfill(field, budget),
        Precoding::Uniform => uniform_rate(field, budget),
    }
}

fn uniform_rate(field: &LambdaField, budget: f64) -> Result<RateResult> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::Domain(format!("power budget must be positive, got {budget:e}")));
    }
    let r_active = field
        .modes
        .iter()
        .map(|lams| lams.iter().filter(|&&lam| lam > 0.0).count())
        .max()
        .unwrap_or(0);
    if r_active == 0 {
        return Ok(zero_capacity(field));
    }
    let density = budget / (r_active as f64 * field.grid.total_weight());
    let mut per_point = Vec::with_capacity(field.grid.len());
    let mut total_rate = 0.0;
    let mut power_spent = 0.0;
    for ((lams, &w), &f) in field
        .modes
        .iter()
        .zip(field.grid.weights())
        .zip(field.grid.points())
    {
        let powers: Vec<f64> = (0..lams.len())
            .map(|r| if r < r_active { density } else { 0.0 })
            .collect();
        power_spent += w * density * r_active as f64;
        for (&p, &lam) in powers.iter().zip(lams.iter()) {
            if p > 0.0 && lam > 0.0 {
                total_rate += w * (1.0 + p * lam).log2();
            }
        }
        per_point.push(RatePoint { frequency: f, eigenvalues: lams.clone(), powers });
    }
    Ok(RateResult { total_rate, water_level: None, per_point, power_spent })
}

/// Beamforming SNR `density * lambda_max` (dimensionless) for a voltage PSD
/// `power_density` [V^2/Hz].
pub fn beamforming_snr(real: &ChannelRealization, power_density: f64) -> Result<f64> {
    let lams = whitened_eigenmodes(real)?;
    Ok(power_density * lams.first().copied().unwrap_or(0.0))
}

/// Total grid measure [Hz] where the SNR stays within `drop_db` of its peak.
pub fn operational_bandwidth(grid: &FrequencyGrid, snr: &[f64], drop_db: f64) -> f64 {
    assert_eq!(grid.len(), snr.len(), "SNR curve and grid must align");
    let peak = snr.iter().copied().filter(|s| s.is_finite()).fold(0.0_f64, f64::max);
    if peak <= 0.0 {
        return 0.0;
    }
    let threshold = peak * 10f64.powf(-drop_db / 10.0);
    grid.weights()
        .iter()
        .zip(snr.iter())
        .filter(|(_, &s)| s >= threshold)
        .map(|(&w, _)| w)
        .sum()
}

/// Operational bandwidth in octaves: the log-frequency measure
/// `sum w_i / (f_i ln 2)` of the grid where the SNR stays within `drop_db`
/// of its peak. A window `[f_lo, f_hi]` measures `log2(f_hi / f_lo)`, which
/// matches how bandwidth widening reads on a logarithmic frequency axis.
pub fn operational_bandwidth_octaves(grid: &FrequencyGrid, snr: &[f64], drop_db: f64) -> f64 {
    assert_eq!(grid.len(), snr.len(), "SNR curve and grid must align");
    let peak = snr.iter().copied().filter(|s| s.is_finite()).fold(0.0_f64, f64::max);
    if peak <= 0.0 {
        return 0.0;
    }
    let threshold = peak * 10f64.powf(-drop_db / 10.0);
    grid.weights()
        .iter()
        .zip(grid.points())
        .zip(snr.iter())
        .filter(|((_, _), &s)| s >= threshold)
        .map(|((&w, &f), _)| w / (f * std::f64::consts::LN_2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn single_bin(lams: Vec<f64>) -> LambdaField {
        let grid = FrequencyGrid::from_points(vec![1e9], vec![1.0]).unwrap();
        LambdaField::new(grid, vec![lams]).unwrap()
    }

    fn realization(h: DMatrix<Complex64>, r_n: DMatrix<Complex64>) -> ChannelRealization {
        ChannelRealization { frequency: 1e9, h, r_n, condition_p: 1.0, condition_q: 1.0 }
    }

    /// Brute-force oracle: log scan for the bracketing water level, then a
    /// dense linear scan; independent of the bisection path.
    fn scan_oracle(field: &LambdaField, budget: f64) -> f64 {
        let lam_max = field.max_lambda();
        let spent_at = |nu: f64| -> f64 {
            field
                .modes
                .iter()
                .zip(field.grid.weights())
                .map(|(lams, &w)| {
                    w * lams
                        .iter()
                        .filter(|&&lam| lam > nu)
                        .map(|&lam| 1.0 / nu - 1.0 / lam)
                        .sum::<f64>()
                })
                .sum()
        };
        let rate_at = |nu: f64| -> f64 {
            field
                .modes
                .iter()
                .zip(field.grid.weights())
                .map(|(lams, &w)| {
                    w * lams
                        .iter()
                        .filter(|&&lam| lam > nu)
                        .map(|&lam| (lam / nu).log2())
                        .sum::<f64>()
                })
                .sum()
        };
        // coarse log scan
        let decades = 20_000usize;
        let mut best_hi = lam_max;
        let mut best_lo = lam_max * 1e-20;
        for i in 0..decades {
            let nu = lam_max * 10f64.powf(-20.0 * i as f64 / (decades - 1) as f64);
            if spent_at(nu) >= budget {
                best_lo = nu;
                break;
            }
            best_hi = nu;
        }
        // fine linear scan
        let mut best_nu = best_lo;
        let mut best_err = f64::INFINITY;
        for i in 0..200_000 {
            let nu = best_lo + (best_hi - best_lo) * i as f64 / 199_999.0;
            if nu <= 0.0 {
                continue;
            }
            let err = (spent_at(nu) - budget).abs();
            if err < best_err {
                best_err = err;
                best_nu = nu;
            }
        }
        rate_at(best_nu)
    }

    #[test]
    fn whitened_zero_channel_gives_zeros() {
        let h = DMatrix::from_element(2, 3, Complex64::new(0.0, 0.0));
        let r_n = DMatrix::identity(2, 2);
        let lams = whitened_eigenmodes(&realization(h, r_n)).unwrap();
        assert_eq!(lams, vec![0.0; 3]);
    }

    #[test]
    fn whitened_scalar_case() {
        let h = DMatrix::from_element(1, 1, Complex64::new(3.0, 4.0));
        let r_n = DMatrix::from_element(1, 1, Complex64::new(2.0, 0.0));
        let lams = whitened_eigenmodes(&realization(h, r_n)).unwrap();
        assert_relative_eq!(lams[0], 25.0 / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn whitened_rank_one_channel() {
        let u = DVector::from_vec(vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2)]);
        let v = DVector::from_vec(vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(0.1, -0.7),
            Complex64::new(0.9, 0.2),
        ]);
        let h = &u * v.adjoint();
        let r_n = DMatrix::<Complex64>::identity(2, 2) * Complex64::new(0.5, 0.0);
        let lams = whitened_eigenmodes(&realization(h, r_n)).unwrap();
        assert_eq!(lams.len(), 3);
        let expected = u.norm_squared() * v.norm_squared() / 0.5;
        assert_relative_eq!(lams[0], expected, max_relative = 1e-12);
        assert!(lams[1] < 1e-10 * lams[0]);
        assert!(lams[2] < 1e-10 * lams[0]);
    }

    #[test]
    fn whitened_rejects_singular_noise() {
        let h = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        let r_n = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0)); // rank 1
        assert!(matches!(
            whitened_eigenmodes(&realization(h, r_n)),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn waterfill_single_channel_single_bin() {
        let field = single_bin(vec![4.0]);
        let res = waterfill(&field, 1.0).unwrap();
        assert_relative_eq!(res.per_point[0].powers[0], 1.0, max_relative = 1e-9);
        assert_relative_eq!(res.total_rate, 5f64.log2(), max_relative = 1e-9);
        assert_relative_eq!(res.power_spent, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn waterfill_two_channel_closed_form() {
        // lambda = [4, 1], budget 1: nu = 8/9, powers [7/8, 1/8].
        let field = single_bin(vec![4.0, 1.0]);
        let res = waterfill(&field, 1.0).unwrap();
        let nu = res.water_level.unwrap();
        assert_relative_eq!(nu, 8.0 / 9.0, max_relative = 1e-9);
        assert_relative_eq!(res.per_point[0].powers[0], 0.875, max_relative = 1e-9);
        assert_relative_eq!(res.per_point[0].powers[1], 0.125, max_relative = 1e-9);
    }

    #[test]
    fn waterfill_matches_scan_oracle_on_random_field() {
        let mut state = 0x2468u64;
        let mut uniform = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let points: Vec<f64> = (0..5).map(|i| 1e9 + i as f64 * 1e8).collect();
        let grid = FrequencyGrid::from_points(points, vec![1.0; 5]).unwrap();
        let modes: Vec<Vec<f64>> = (0..5)
            .map(|_| {
                let mut lams: Vec<f64> =
                    (0..3).map(|_| 10f64.powf(-2.0 + 4.0 * uniform())).collect();
                lams.sort_by(|a, b| b.partial_cmp(a).unwrap());
                lams
            })
            .collect();
        let field = LambdaField::new(grid, modes).unwrap();
        let budget = 1.7;
        let res = waterfill(&field, budget).unwrap();
        let oracle = scan_oracle(&field, budget);
        assert_relative_eq!(res.total_rate, oracle, max_relative = 1e-6);
    }

    #[test]
    fn waterfill_zero_field_is_zero_capacity() {
        let field = single_bin(vec![0.0, 0.0]);
        let res = waterfill(&field, 1.0).unwrap();
        assert_eq!(res.total_rate, 0.0);
        assert_eq!(res.water_level, None);
        assert_eq!(res.power_spent, 0.0);
    }

    #[test]
    fn uniform_equals_optimum_for_flat_single_mode() {
        let grid = FrequencyGrid::linear(1e9, 2e9, 33).unwrap();
        let modes = vec![vec![5.0]; 33];
        let field = LambdaField::new(grid, modes).unwrap();
        let opt = achievable_rate(&field, 2.0, Precoding::Optimum).unwrap();
        let uni = achievable_rate(&field, 2.0, Precoding::Uniform).unwrap();
        assert_relative_eq!(opt.total_rate, uni.total_rate, max_relative = 1e-9);
    }

    #[test]
    fn optimum_dominates_uniform() {
        let mut state = 0x1357u64;
        let mut uniform01 = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let grid = FrequencyGrid::linear(1e9, 3e9, 7).unwrap();
            let modes: Vec<Vec<f64>> = (0..7)
                .map(|_| {
                    let mut lams: Vec<f64> =
                        (0..4).map(|_| 10f64.powf(-3.0 + 6.0 * uniform01())).collect();
                    lams.sort_by(|a, b| b.partial_cmp(a).unwrap());
                    lams
                })
                .collect();
            let field = LambdaField::new(grid, modes).unwrap();
            let budget = 10f64.powf(-1.0 + 2.0 * uniform01());
            let opt = achievable_rate(&field, budget, Precoding::Optimum).unwrap();
            let uni = achievable_rate(&field, budget, Precoding::Uniform).unwrap();
            assert!(
                opt.total_rate >= uni.total_rate * (1.0 - 1e-9),
                "optimum {} < uniform {}",
                opt.total_rate,
                uni.total_rate
            );
        }
    }

    #[test]
    fn rate_monotone_in_budget() {
        let grid = FrequencyGrid::linear(1e9, 2e9, 9).unwrap();
        let modes = vec![vec![3.0, 0.4, 0.01]; 9];
        let field = LambdaField::new(grid, modes).unwrap();
        let mut prev = 0.0;
        for budget in [0.5, 2.0, 8.0] {
            let r = waterfill(&field, budget).unwrap().total_rate;
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn grid_weights_sum_to_bandwidth() {
        let lin = FrequencyGrid::linear(1e8, 3e10, 257).unwrap();
        assert_relative_eq!(lin.total_weight(), 3e10 - 1e8, max_relative = 1e-9);
        let log = FrequencyGrid::log_spaced(1e8, 3e10, 2048).unwrap();
        assert_relative_eq!(log.total_weight(), 3e10 - 1e8, max_relative = 1e-9);
        let bands = BandSet::default();
        let grid = FrequencyGrid::from_bands(&bands, 512).unwrap();
        assert_relative_eq!(grid.total_weight(), bands.total_bandwidth(), max_relative = 1e-9);
        assert_relative_eq!(bands.total_bandwidth(), 340e6, max_relative = 1e-12);
    }

    #[test]
    fn grid_and_bands_reject_invalid() {
        assert!(FrequencyGrid::linear(2e9, 1e9, 16).is_err());
        assert!(FrequencyGrid::linear(1e9, 2e9, 1).is_err());
        assert!(FrequencyGrid::from_points(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(BandSet::new(vec![(1e9, 2e9), (1.5e9, 3e9)]).is_err());
        assert!(BandSet::new(vec![]).is_err());
    }

    #[test]
    fn miso_two_identical_paths_double_the_snr() {
        use crate::chu::ChuElement;
        use crate::coupling::{ArrayGeometry, Orientation};
        use crate::network::{solve_link, ChannelKind, FrontEndConfig, PropagationMode};
        use crate::propagation::LinkConfig;

        let elem = ChuElement::with_radius(0.005 / 1.932).unwrap();
        let rx = ArrayGeometry::single(ChuElement::with_radius(0.5).unwrap());
        // deep far field keeps the re-radiated transmit-noise term below
        // the 1e-6 tolerance of the idealized coherent-combining oracle
        let link = LinkConfig::new(3.0, 3.5).unwrap();
        let fe = FrontEndConfig::default();
        let f = 5e9;
        let density = 1e-9;
        let snr_for = |n: usize| -> f64 {
            let tx = if n == 1 {
                ArrayGeometry::single(elem)
            } else {
                ArrayGeometry::new(n, 0.005, Orientation::Colinear, elem).unwrap()
            };
            let real = solve_link(
                &tx, &rx, &link, &fe, &ChannelKind::Los,
                PropagationMode::FarField, false, f,
            )
            .unwrap();
            beamforming_snr(&real, density).unwrap()
        };
        // two decoupled identical rank-1 paths combine coherently; the only
        // departure from exactly 2x is the (tiny) re-radiated noise term
        let ratio = snr_for(2) / snr_for(1);
        assert_relative_eq!(ratio, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn operational_bandwidth_flat_and_spike() {
        let grid = FrequencyGrid::linear(1e9, 2e9, 11).unwrap();
        let flat = vec![3.0; 11];
        assert_relative_eq!(
            operational_bandwidth(&grid, &flat, 3.0),
            1e9,
            max_relative = 1e-12
        );
        let mut spike = vec![1e-9; 11];
        spike[4] = 100.0;
        let bw = operational_bandwidth(&grid, &spike, 3.0);
        assert_relative_eq!(bw, grid.weights()[4], max_relative = 1e-12);
    }

    #[test]
    fn octave_bandwidth_of_flat_curve_is_log_span() {
        let grid = FrequencyGrid::log_spaced(1e9, 8e9, 513).unwrap();
        let flat = vec![2.0; 513];
        let octaves = operational_bandwidth_octaves(&grid, &flat, 3.0);
        // trapezoid sum of 1/f over a log grid approaches ln(8)/ln(2) = 3
        assert_relative_eq!(octaves, 3.0, max_relative = 1e-4);
    }

    #[test]
    fn operational_bandwidth_lorentzian_width() {
        // S(f) = 1/(1 + ((f - f0)/gamma)^2): the 3 dB (half-power) width is
        // 2 gamma sqrt(10^0.3 - 1) ~ 1.9953 gamma.
        let f0 = 5e9;
        let gamma = 1e8;
        let n = 4001;
        let grid = FrequencyGrid::linear(4e9, 6e9, n).unwrap();
        let snr: Vec<f64> = grid
            .points()
            .iter()
            .map(|&f| 1.0 / (1.0 + ((f - f0) / gamma).powi(2)))
            .collect();
        let bw = operational_bandwidth(&grid, &snr, 3.0);
        let analytic = 2.0 * gamma * (10f64.powf(0.3) - 1.0).sqrt();
        let step = 2e9 / (n - 1) as f64;
        assert!(
            (bw - analytic).abs() <= step,
            "bw {bw:.6e} vs analytic {analytic:.6e} (step {step:.3e})"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn waterfill_kkt_and_budget(
            seed in 0u64..1_000_000,
            level_pos in 0.05f64..0.95,
            n_modes in 1usize..5,
            n_bins in 1usize..8,
        ) {
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
            let mut uniform = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let points: Vec<f64> = (0..n_bins).map(|i| 1e9 + i as f64 * 1e8).collect();
            let weights = vec![1e8; n_bins];
            let grid = FrequencyGrid::from_points(points, weights).unwrap();
            let modes: Vec<Vec<f64>> = (0..n_bins)
                .map(|_| {
                    let mut lams: Vec<f64> = (0..n_modes)
                        .map(|_| 10f64.powf(-9.0 + 6.0 * uniform()))
                        .collect();
                    lams.sort_by(|a, b| b.partial_cmp(a).unwrap());
                    lams
                })
                .collect();
            let field = LambdaField::new(grid, modes).unwrap();
            // Pick the budget by placing the water level strictly inside the
            // eigenvalue range; budgets that park the level within an ulp of
            // lambda_max are numerically unresolvable for any solver.
            let lam_max = field.max_lambda();
            let target_nu = lam_max * 10f64.powf(-4.0 * level_pos);
            let budget: f64 = field
                .modes
                .iter()
                .zip(field.grid.weights())
                .map(|(lams, &w)| {
                    w * lams
                        .iter()
                        .filter(|&&lam| lam > target_nu)
                        .map(|&lam| 1.0 / target_nu - 1.0 / lam)
                        .sum::<f64>()
                })
                .sum();
            prop_assume!(budget > 0.0 && budget.is_finite());
            let res = waterfill(&field, budget).unwrap();
            let nu = res.water_level.unwrap();
            // budget conservation
            prop_assert!(((res.power_spent - budget) / budget).abs() < 1e-6);
            // KKT: active modes rise to the water level, inactive sit below nu
            for pt in &res.per_point {
                for (&p, &lam) in pt.powers.iter().zip(pt.eigenvalues.iter()) {
                    if p > 0.0 {
                        let level = p + 1.0 / lam;
                        prop_assert!(((level - 1.0 / nu) * nu).abs() < 1e-9);
                    } else {
                        prop_assert!(lam <= nu * (1.0 + 1e-12));
                    }
                }
            }
        }
    }
}
