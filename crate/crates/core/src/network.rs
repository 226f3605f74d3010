//! Multiport circuit solve: end-to-end channel matrix and noise covariance.
//!
//! With generator resistance `R`, LNA input resistance `R_in` and voltage
//! gain `beta`, the output voltage is `v_L = H v_G + n` where
//!
//! ```text
//! P = (Z_r + R_in I)^-1
//! Q = (Z_t + R I - Z_tr P Z_rt)^-1        (bilateral)
//!   = (Z_t + R I)^-1                      (far-field, unilateral)
//! H = beta R_in P Z_rt Q
//! ```
//!
//! The noise covariance gathers the antenna background noise (covariance
//! `4 k_b T Re{Z}` per array) and the LNA-internal noise
//! (`4 k_b T R_in (N_f - 1)` per branch):
//!
//! ```text
//! R_n = 4 k_b T R_in [ (N_f - 1) I
//!       + beta^2 R_in ( A Re{Z_r} A^H + B Re{Z_t} B^H ) ]
//! A = P (I + Z_rt Q Z_tr P)   (bilateral)   A = P   (far-field)
//! B = P Z_rt Q
//! ```
//!
//! In the far-field the transmit background noise is dominated by the
//! injected signal power, but the `B Re{Z_t} B^H` term is kept since it
//! represents transmit noise re-radiated through the channel; it vanishes
//! with `Z_rt`. Both variants coincide exactly once `Z_rt = Z_tr = 0`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::coupling::{array_impedance, ArrayGeometry};
use crate::propagation::{
    los_transimpedance, rayleigh_transimpedance, real_to_complex, FadingDraw, LinkConfig,
};
use crate::{Error, Result, BOLTZMANN};

/// Condition-number threshold above which results carry a warning.
pub const CONDITION_WARN_THRESHOLD: f64 = 1e12;

/// Receive front-end parameters: generator, LNA and temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEndConfig {
    /// Generator internal resistance `R` [ohm].
    pub generator_r: f64,
    /// LNA voltage gain `beta` (dimensionless).
    pub lna_gain_beta: f64,
    /// LNA input resistance `R_in` [ohm].
    pub lna_input_r: f64,
    /// LNA noise figure `N_f` (linear, >= 1).
    pub noise_figure: f64,
    /// Equilibrium temperature `T` [K].
    pub temperature: f64,
}

impl FrontEndConfig {
    pub fn new(
        generator_r: f64,
        lna_gain_beta: f64,
        lna_input_r: f64,
        noise_figure: f64,
        temperature: f64,
    ) -> Result<Self> {
        if !(generator_r > 0.0) {
            return Err(Error::Validation(format!(
                "generator resistance must be positive, got {generator_r:e}"
            )));
        }
        if !(lna_input_r > 0.0) {
            return Err(Error::Validation(format!(
                "LNA input resistance must be positive, got {lna_input_r:e}"
            )));
        }
        if !(noise_figure >= 1.0) {
            return Err(Error::Validation(format!(
                "noise figure must be >= 1 (linear), got {noise_figure:e}"
            )));
        }
        if !(temperature > 0.0) {
            return Err(Error::Validation(format!(
                "temperature must be positive, got {temperature:e}"
            )));
        }
        Ok(Self { generator_r, lna_gain_beta, lna_input_r, noise_figure, temperature })
    }
}

impl Default for FrontEndConfig {
    /// Standard RF defaults: `R = R_in = 50` ohm, `beta = 10`, `N_f = 2`
    /// (3 dB), `T = 290` K.
    fn default() -> Self {
        Self {
            generator_r: 50.0,
            lna_gain_beta: 10.0,
            lna_input_r: 50.0,
            noise_figure: 2.0,
            temperature: 290.0,
        }
    }
}

/// Which closed forms to use: the far-field unilateral approximation
/// (`Z_tr` treated as zero) or the bilateral near-field forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagationMode {
    #[default]
    FarField,
    NearField,
}

impl PropagationMode {
    pub fn name(&self) -> &'static str {
        match self {
            PropagationMode::FarField => "ff",
            PropagationMode::NearField => "nf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ff" => Ok(PropagationMode::FarField),
            "nf" => Ok(PropagationMode::NearField),
            other => Err(Error::Config(format!("unknown mode `{other}` (expected `ff` or `nf`)"))),
        }
    }
}

/// The four frequency-dependent blocks of the joint impedance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiportBlocks {
    /// Evaluation frequency [Hz].
    pub frequency: f64,
    /// N x N transmit array impedance [ohm].
    pub z_t: DMatrix<Complex64>,
    /// M x M receive array impedance [ohm].
    pub z_r: DMatrix<Complex64>,
    /// M x N transmit-to-receive transimpedance [ohm].
    pub z_rt: DMatrix<Complex64>,
    /// N x M receive-to-transmit transimpedance [ohm]; `z_rt` transposed by
    /// reciprocity, or zero under the unilateral approximation.
    pub z_tr: DMatrix<Complex64>,
}

impl MultiportBlocks {
    /// Builds the blocks with `z_tr = z_rt^T` (reciprocity).
    pub fn new(
        frequency: f64,
        z_t: DMatrix<Complex64>,
        z_r: DMatrix<Complex64>,
        z_rt: DMatrix<Complex64>,
    ) -> Result<Self> {
        let z_tr = z_rt.transpose();
        Self::with_z_tr(frequency, z_t, z_r, z_rt, z_tr)
    }

    /// Builds the blocks with an explicit `z_tr`.
    pub fn with_z_tr(
        frequency: f64,
        z_t: DMatrix<Complex64>,
        z_r: DMatrix<Complex64>,
        z_rt: DMatrix<Complex64>,
        z_tr: DMatrix<Complex64>,
    ) -> Result<Self> {
        if !z_t.is_square() || !z_r.is_square() {
            return Err(Error::Validation("array impedance blocks must be square".into()));
        }
        let n = z_t.nrows();
        let m = z_r.nrows();
        if z_rt.nrows() != m || z_rt.ncols() != n {
            return Err(Error::Validation(format!(
                "transimpedance block is {}x{}, expected {m}x{n}",
                z_rt.nrows(),
                z_rt.ncols()
            )));
        }
        if z_tr.nrows() != n || z_tr.ncols() != m {
            return Err(Error::Validation(format!(
                "reverse transimpedance block is {}x{}, expected {n}x{m}",
                z_tr.nrows(),
                z_tr.ncols()
            )));
        }
        check_symmetric(&z_t, "transmit impedance")?;
        check_symmetric(&z_r, "receive impedance")?;
        Ok(Self { frequency, z_t, z_r, z_rt, z_tr })
    }

    /// Applies the unilateral approximation: `z_tr = 0`.
    pub fn unilateral(mut self) -> Self {
        self.z_tr.fill(Complex64::new(0.0, 0.0));
        self
    }

    /// Transmit element count N.
    pub fn n(&self) -> usize {
        self.z_t.nrows()
    }

    /// Receive element count M.
    pub fn m(&self) -> usize {
        self.z_r.nrows()
    }
}

fn check_symmetric(z: &DMatrix<Complex64>, what: &str) -> Result<()> {
    let scale = z.iter().map(|v| v.norm()).fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    for p in 0..z.nrows() {
        for q in (p + 1)..z.ncols() {
            let dev = (z[(p, q)] - z[(q, p)]).norm();
            if dev > 1e-8 * scale {
                return Err(Error::Validation(format!(
                    "{what} block violates reciprocity at ({p},{q}): relative deviation {:.3e}",
                    dev / scale
                )));
            }
        }
    }
    Ok(())
}

/// An inverse computed through LU factorization, with its 1-norm condition
/// number.
#[derive(Debug, Clone)]
pub struct FactoredInverse {
    pub matrix: DMatrix<Complex64>,
    pub condition: f64,
}

/// Inverts via LU with partial pivoting plus one iterative-refinement pass;
/// reports the exact 1-norm condition number of the factored system.
fn factored_inverse(a: &DMatrix<Complex64>, context: &str) -> Result<FactoredInverse> {
    let n = a.nrows();
    let lu = a.clone().lu();
    let identity = DMatrix::<Complex64>::identity(n, n);
    let mut inv = lu.solve(&identity).ok_or_else(|| Error::Singular {
        context: context.to_string(),
        condition: f64::INFINITY,
    })?;
    let residual = &identity - a * &inv;
    if let Some(correction) = lu.solve(&residual) {
        inv += correction;
    }
    let condition = one_norm(a) * one_norm(&inv);
    if !condition.is_finite() || inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular { context: context.to_string(), condition: f64::INFINITY });
    }
    Ok(FactoredInverse { matrix: inv, condition })
}

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

/// `P = (Z_r + R_in I)^-1`, by factorization-based solve.
pub fn p_matrix(blocks: &MultiportBlocks, fe: &FrontEndConfig) -> Result<FactoredInverse> {
    let mut a = blocks.z_r.clone();
    for k in 0..blocks.m() {
        a[(k, k)] += Complex64::new(fe.lna_input_r, 0.0);
    }
    factored_inverse(&a, "P = (Z_r + R_in I)^-1")
}

/// `Q`: far-field `(Z_t + R I)^-1`, bilateral
/// `(Z_t + R I - Z_tr P Z_rt)^-1`.
pub fn q_matrix(
    blocks: &MultiportBlocks,
    fe: &FrontEndConfig,
    mode: PropagationMode,
) -> Result<FactoredInverse> {
    let mut a = blocks.z_t.clone();
    for k in 0..blocks.n() {
        a[(k, k)] += Complex64::new(fe.generator_r, 0.0);
    }
    if mode == PropagationMode::NearField {
        let p = p_matrix(blocks, fe)?;
        a -= &blocks.z_tr * p.matrix * &blocks.z_rt;
    }
    factored_inverse(&a, "Q = (Z_t + R I - Z_tr P Z_rt)^-1")
}

fn assemble_channel(
    blocks: &MultiportBlocks,
    fe: &FrontEndConfig,
    p: &FactoredInverse,
    q: &FactoredInverse,
) -> DMatrix<Complex64> {
    let gain = Complex64::new(fe.lna_gain_beta * fe.lna_input_r, 0.0);
    &p.matrix * &blocks.z_rt * &q.matrix * gain
}

fn assemble_noise(
    blocks: &MultiportBlocks,
    fe: &FrontEndConfig,
    mode: PropagationMode,
    p: &FactoredInverse,
    q: &FactoredInverse,
) -> Result<DMatrix<Complex64>> {
    let m = blocks.m();
    let re_zr = real_to_complex(&blocks.z_r.map(|z| z.re));
    let re_zt = real_to_complex(&blocks.z_t.map(|z| z.re));
    let b = &p.matrix * &blocks.z_rt * &q.matrix;
    let a = match mode {
        PropagationMode::FarField => p.matrix.clone(),
        PropagationMode::NearField => &p.matrix + &b * &blocks.z_tr * &p.matrix,
    };
    let inner = &a * &re_zr * a.adjoint() + &b * &re_zt * b.adjoint();
    let amplified = fe.lna_gain_beta * fe.lna_gain_beta * fe.lna_input_r;
    let floor = fe.noise_figure - 1.0;
    let scale = 4.0 * BOLTZMANN * fe.temperature * fe.lna_input_r;
    let mut r_n = inner * Complex64::new(scale * amplified, 0.0);
    for k in 0..m {
        r_n[(k, k)] += Complex64::new(scale * floor, 0.0);
    }
    // kill rounding-level asymmetry, then verify PSD
    let r_n = (&r_n + r_n.adjoint()) * Complex64::new(0.5, 0.0);
    validate_hermitian_psd(&r_n, 1e-9)?;
    Ok(r_n)
}

/// Checks Hermitian positive semidefiniteness within a relative eigenvalue
/// tolerance; a Cholesky success short-circuits the eigen check.
fn validate_hermitian_psd(r: &DMatrix<Complex64>, rel_tol: f64) -> Result<()> {
    if r.clone().cholesky().is_some() {
        return Ok(());
    }
    let eig = r.clone().symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lam_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if lam_min < -rel_tol * lam_max.abs() {
        return Err(Error::Inconsistent(format!(
            "noise covariance not PSD: eigenvalues in [{lam_min:.6e}, {lam_max:.6e}]"
        )));
    }
    Ok(())
}

/// End-to-end voltage transfer matrix `H = beta R_in P Z_rt Q` (M x N,
/// dimensionless).
pub fn channel_matrix(
    blocks: &MultiportBlocks,
    fe: &FrontEndConfig,
    mode: PropagationMode,
) -> Result<DMatrix<Complex64>> {
    let p = p_matrix(blocks, fe)?;
    let q = q_matrix(blocks, fe, mode)?;
    Ok(assemble_channel(blocks, fe, &p, &q))
}

/// Noise covariance `R_n` (M x M, Hermitian PSD, V^2/Hz).
pub fn noise_covariance(
    blocks: &MultiportBlocks,
    fe: &FrontEndConfig,
    mode: PropagationMode,
) -> Result<DMatrix<Complex64>> {
    let p = p_matrix(blocks, fe)?;
    let q = q_matrix(blocks, fe, mode)?;
    assemble_noise(blocks, fe, mode, &p, &q)
}

/// Channel matrix and noise covariance at one frequency.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Evaluation frequency [Hz].
    pub frequency: f64,
    /// M x N voltage transfer matrix (dimensionless).
    pub h: DMatrix<Complex64>,
    /// M x M Hermitian PSD noise covariance [V^2/Hz].
    pub r_n: DMatrix<Complex64>,
    /// 1-norm condition number of the `P` solve.
    pub condition_p: f64,
    /// 1-norm condition number of the `Q` solve.
    pub condition_q: f64,
}

impl ChannelRealization {
    /// Conditioning warnings attached to this realization, if any.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.condition_p > CONDITION_WARN_THRESHOLD {
            out.push(format!("P solve condition {:.3e} exceeds 1e12", self.condition_p));
        }
        if self.condition_q > CONDITION_WARN_THRESHOLD {
            out.push(format!("Q solve condition {:.3e} exceeds 1e12", self.condition_q));
        }
        out
    }
}

/// Channel model selection for [`solve_link`].
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    Los,
    Rayleigh(FadingDraw),
}

/// Builds the impedance blocks from the array geometries, the transimpedance
/// from the channel model, and solves for `H` and `R_n` at frequency `f`.
///
/// `coupled` selects mutual-coupling (otherwise diagonal) array matrices.
#[allow(clippy::too_many_arguments)]
pub fn solve_link(
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
    link: &LinkConfig,
    fe: &FrontEndConfig,
    kind: &ChannelKind,
    mode: PropagationMode,
    coupled: bool,
    f: f64,
) -> Result<ChannelRealization> {
    let tx_z = array_impedance(tx_geom, f, coupled)?;
    let rx_z = array_impedance(rx_geom, f, coupled)?;
    let z_rt = match kind {
        ChannelKind::Los => los_transimpedance(&tx_z, &rx_z, tx_geom, rx_geom, link, f)?,
        ChannelKind::Rayleigh(draw) => rayleigh_transimpedance(&tx_z, &rx_z, link, draw, f)?,
    };
    let blocks = MultiportBlocks::new(f, tx_z.entries, rx_z.entries, z_rt)?;
    let p = p_matrix(&blocks, fe)?;
    let q = q_matrix(&blocks, fe, mode)?;
    let h = assemble_channel(&blocks, fe, &p, &q);
    let r_n = assemble_noise(&blocks, fe, mode, &p, &q)?;
    Ok(ChannelRealization {
        frequency: f,
        h,
        r_n,
        condition_p: p.condition,
        condition_q: q.condition,
    })
}
