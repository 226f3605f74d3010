//! Far-field transimpedance matrices for LoS and correlated Rayleigh channels.
//!
//! The LoS matrix is the Friis-based rank-1 outer product
//!
//! ```text
//! Z_rt = c sqrt(G_t G_r) / (2 pi f d^(alpha/2))
//!        * diag(Re{Z_r})^(1/2) a_r a_t^T diag(Re{Z_t})^(1/2) * exp(j phi)
//! ```
//!
//! where `a_t`, `a_r` are the array steering vectors and
//! `phi = pi - atan(2 pi f a_T / c) - atan(2 pi f a_R / c)` is the common
//! phase of the two element current dividers. The sign of the global phase
//! follows the element-level circuit derivation, of which the matrix form is
//! the outer-product rearrangement.
//!
//! The Rayleigh matrix replaces the outer product by a seeded i.i.d. complex
//! Gaussian matrix `F` colored on both sides by full matrix square roots:
//!
//! ```text
//! Z_rt = c / (2 pi f d^(alpha/2)) * Re{Z_r}^(1/2) F Re{Z_t}^(1/2)
//! ```
//!
//! so mutual coupling shapes the spatial correlation of the fading.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::coupling::{ArrayGeometry, ImpedanceMatrix};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Phase-progression convention of the steering vectors.
///
/// The literal convention puts `cos(theta)` in the exponent with `theta`
/// measured from the broadside axis; `theta = 0` then yields a full
/// end-fire-like phase progression. The alternative puts `sin(theta)` in the
/// exponent so that `theta = 0` gives a uniform (true broadside) excitation;
/// it is provided for sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleConvention {
    #[default]
    CosLiteral,
    SinBroadside,
}

impl AngleConvention {
    fn phase_factor(&self, theta: f64) -> f64 {
        match self {
            AngleConvention::CosLiteral => theta.cos(),
            AngleConvention::SinBroadside => theta.sin(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AngleConvention::CosLiteral => "cos",
            AngleConvention::SinBroadside => "sin",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cos" => Ok(AngleConvention::CosLiteral),
            "sin" => Ok(AngleConvention::SinBroadside),
            other => Err(Error::Config(format!(
                "unknown angle convention `{other}` (expected `cos` or `sin`)"
            ))),
        }
    }
}

/// Link-level propagation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    /// Transmit-receive separation `d` [m].
    pub distance: f64,
    /// Path-loss exponent `alpha` (2 = free space).
    pub pathloss_alpha: f64,
    /// Transmit antenna gain (3/2 for the sphere-bounded element in the
    /// equatorial plane).
    pub gain_tx: f64,
    /// Receive antenna gain.
    pub gain_rx: f64,
    /// Departure angle w.r.t. the transmit array broadside [rad].
    pub theta_tx: f64,
    /// Arrival angle w.r.t. the receive array broadside [rad].
    pub theta_rx: f64,
    /// Steering-vector phase convention.
    pub angle_convention: AngleConvention,
}

impl LinkConfig {
    /// Creates a link with default gains 3/2, zero angles, and the literal
    /// angle convention.
    pub fn new(distance: f64, pathloss_alpha: f64) -> Result<Self> {
        if !(distance > 0.0) || !distance.is_finite() {
            return Err(Error::Validation(format!(
                "link distance must be positive and finite, got {distance:e} m"
            )));
        }
        if !(pathloss_alpha > 0.0) || !pathloss_alpha.is_finite() {
            return Err(Error::Validation(format!(
                "path-loss exponent must be positive and finite, got {pathloss_alpha:e}"
            )));
        }
        Ok(Self {
            distance,
            pathloss_alpha,
            gain_tx: 1.5,
            gain_rx: 1.5,
            theta_tx: 0.0,
            theta_rx: 0.0,
            angle_convention: AngleConvention::CosLiteral,
        })
    }
}

/// Steering vector with the literal convention: entry `k` (0-based) is
/// `exp(-j 2 pi k f delta cos(theta) / c)`.
pub fn steering_vector(count: usize, spacing: f64, theta: f64, f: f64) -> DVector<Complex64> {
    steering_vector_with(AngleConvention::CosLiteral, count, spacing, theta, f)
}

/// Steering vector under an explicit angle convention.
pub fn steering_vector_with(
    convention: AngleConvention,
    count: usize,
    spacing: f64,
    theta: f64,
    f: f64,
) -> DVector<Complex64> {
    let step = -2.0 * std::f64::consts::PI * f * spacing * convention.phase_factor(theta)
        / SPEED_OF_LIGHT;
    DVector::from_fn(count, |k, _| Complex64::from_polar(1.0, step * k as f64))
}

/// Common phase of the transmit/receive current dividers:
/// `phi = pi - atan(2 pi f a_T / c) - atan(2 pi f a_R / c)`, in (0, pi).
pub fn relative_phase(radius_tx: f64, radius_rx: f64, f: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f;
    std::f64::consts::PI
        - (w * radius_tx / SPEED_OF_LIGHT).atan()
        - (w * radius_rx / SPEED_OF_LIGHT).atan()
}

/// Friis amplitude prefactor `c sqrt(G_t G_r) / (2 pi f d^(alpha/2))`.
pub fn friis_amplitude(link: &LinkConfig, f: f64) -> f64 {
    SPEED_OF_LIGHT * (link.gain_tx * link.gain_rx).sqrt()
        / (2.0 * std::f64::consts::PI * f * link.distance.powf(link.pathloss_alpha / 2.0))
}

/// LoS transimpedance matrix [ohm], an M x N rank-1 outer product.
///
/// Both impedance matrices must be evaluated at `f` and their diagonal real
/// parts must be strictly positive.
pub fn los_transimpedance(
    tx_z: &ImpedanceMatrix,
    rx_z: &ImpedanceMatrix,
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
    link: &LinkConfig,
    f: f64,
) -> Result<DMatrix<Complex64>> {
    check_same_frequency(tx_z, f)?;
    check_same_frequency(rx_z, f)?;
    if tx_z.dim() != tx_geom.count() || rx_z.dim() != rx_geom.count() {
        return Err(Error::Validation(
            "impedance matrix dimensions do not match array geometry".into(),
        ));
    }
    let sqrt_diag = |z: &ImpedanceMatrix| -> Result<Vec<f64>> {
        (0..z.dim())
            .map(|k| {
                let re = z.entries[(k, k)].re;
                if re > 0.0 {
                    Ok(re.sqrt())
                } else {
                    Err(Error::Domain(format!(
                        "diagonal real part must be positive, got {re:e} at index {k}"
                    )))
                }
            })
            .collect()
    };
    let sqrt_re_t = sqrt_diag(tx_z)?;
    let sqrt_re_r = sqrt_diag(rx_z)?;

    let a_t = steering_vector_with(
        link.angle_convention,
        tx_geom.count(),
        tx_geom.spacing(),
        link.theta_tx,
        f,
    );
    let a_r = steering_vector_with(
        link.angle_convention,
        rx_geom.count(),
        rx_geom.spacing(),
        link.theta_rx,
        f,
    );

    let phi = relative_phase(tx_geom.element().radius_a(), rx_geom.element().radius_a(), f);
    let scale = Complex64::from_polar(friis_amplitude(link, f), phi);

    let m = rx_geom.count();
    let n = tx_geom.count();
    Ok(DMatrix::from_fn(m, n, |row, col| {
        scale * sqrt_re_r[row] * a_r[row] * a_t[col] * sqrt_re_t[col]
    }))
}

/// Hermitian PSD matrix square root via eigendecomposition.
///
/// The input must be Hermitian within `1e-10` relative; eigenvalues below
/// `-1e-9 * lambda_max` are an error and those in `[-1e-9 lambda_max, 0)`
/// are clamped to zero.
pub fn psd_matrix_sqrt(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if !m.is_square() {
        return Err(Error::Validation("matrix square root requires a square matrix".into()));
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if scale > 0.0 {
        let dev = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| (m[(i, j)] - m[(j, i)].conj()).norm())
            .fold(0.0_f64, f64::max);
        if dev > 1e-10 * scale {
            return Err(Error::NotHermitian { deviation: dev / scale, tol: 1e-10 });
        }
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = 1e-9 * lam_max.abs();
    let mut lam_min = f64::INFINITY;
    for &lam in eig.eigenvalues.iter() {
        lam_min = lam_min.min(lam);
        if lam < -threshold {
            return Err(Error::NotPsd { min: lam, max: lam_max });
        }
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|lam| {
        Complex64::new(lam.max(0.0).sqrt(), 0.0)
    }));
    Ok(&eig.eigenvectors * sqrt_diag * eig.eigenvectors.adjoint())
}

/// Converts a real matrix to a complex one.
pub fn real_to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// One realization of the small-scale fading matrix `F`, entries i.i.d.
/// circularly symmetric complex Gaussian with variance 1/2 per dimension.
///
/// Draws are keyed by `(seed, freq_index, draw_index)` on a counter-based
/// generator, so sweeps are reproducible regardless of evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingDraw {
    pub seed: u64,
    pub matrix: DMatrix<Complex64>,
}

impl FadingDraw {
    /// Generates the M x N fading matrix for one (frequency, draw) cell.
    pub fn generate(seed: u64, freq_index: u32, draw_index: u32, rows: usize, cols: usize) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(((freq_index as u64) << 32) | draw_index as u64);
        let scale = 0.5_f64.sqrt();
        let data: Vec<Complex64> = (0..rows * cols)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * scale, im * scale)
            })
            .collect();
        Self { seed, matrix: DMatrix::from_vec(rows, cols, data) }
    }
}

/// Rayleigh transimpedance matrix [ohm]:
/// `c/(2 pi f d^(alpha/2)) * Re{Z_r}^(1/2) F Re{Z_t}^(1/2)`.
pub fn rayleigh_transimpedance(
    tx_z: &ImpedanceMatrix,
    rx_z: &ImpedanceMatrix,
    link: &LinkConfig,
    draw: &FadingDraw,
    f: f64,
) -> Result<DMatrix<Complex64>> {
    check_same_frequency(tx_z, f)?;
    check_same_frequency(rx_z, f)?;
    if draw.matrix.nrows() != rx_z.dim() || draw.matrix.ncols() != tx_z.dim() {
        return Err(Error::Validation(format!(
            "fading matrix is {}x{}, expected {}x{}",
            draw.matrix.nrows(),
            draw.matrix.ncols(),
            rx_z.dim(),
            tx_z.dim()
        )));
    }
    let sqrt_re_r = psd_matrix_sqrt(&real_to_complex(&rx_z.real_part()))?;
    let sqrt_re_t = psd_matrix_sqrt(&real_to_complex(&tx_z.real_part()))?;
    let amp = SPEED_OF_LIGHT
        / (2.0 * std::f64::consts::PI * f * link.distance.powf(link.pathloss_alpha / 2.0));
    Ok(sqrt_re_r * &draw.matrix * sqrt_re_t * Complex64::new(amp, 0.0))
}

fn check_same_frequency(z: &ImpedanceMatrix, f: f64) -> Result<()> {
    if (z.frequency - f).abs() > 1e-9 * f.abs() {
        return Err(Error::Validation(format!(
            "impedance matrix evaluated at {:e} Hz, expected {f:e} Hz",
            z.frequency
        )));
    }
    Ok(())
}
