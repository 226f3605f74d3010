//! Scenario configuration, experiment sweeps, and tabular output.
//!
//! A [`Scenario`] bundles every knob of one experiment: transmit/receive
//! array specs, link and front-end parameters, frequency grids and bands,
//! channel model, propagation mode, power budget, and seeding. Defaults
//! reproduce the reference setup: 100 MHz - 30 GHz span, 0.5 cm spacing,
//! antenna size `a = delta / (6 zeta(3))^(1/3)`, 2 W budget, path-loss
//! exponent 3.5, separation `30 lambda_min`, broadside angles.
//!
//! Sweeps (SNR vs frequency, rate vs spacing ratio, N x M rate heatmaps,
//! tight-coupling reports) are described by [`SweepSpec`] and produce
//! [`ResultTable`]s that serialize to CSV with a `#`-prefixed metadata
//! header echoing the full configuration.

mod config;
mod sweep;

pub use config::{parse_scenario, serialize_scenario, valid_keys};
pub use sweep::{emit_table, run_sweep, Cell, ResultTable, SweepSpec};

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::chu::ChuElement;
use crate::coupling::{ArrayGeometry, Orientation};
use crate::network::{
    solve_link, ChannelKind, ChannelRealization, FrontEndConfig, PropagationMode,
};
use crate::propagation::{AngleConvention, FadingDraw, LinkConfig};
use crate::rate::{
    achievable_rate, whitened_eigenmodes, BandSet, FrequencyGrid, LambdaField, Precoding,
    RateResult,
};
use crate::tightcoupling::asymptotic_ratio;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Channel model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelModel {
    #[default]
    Los,
    Rayleigh,
}

impl ChannelModel {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelModel::Los => "los",
            ChannelModel::Rayleigh => "rayleigh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "los" => Ok(ChannelModel::Los),
            "rayleigh" => Ok(ChannelModel::Rayleigh),
            other => Err(Error::Config(format!(
                "unknown channel `{other}` (expected `los` or `rayleigh`)"
            ))),
        }
    }
}

/// Which side carries the antenna array in single-sided sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// N transmit antennas, one large receive antenna.
    Miso,
    /// One large transmit antenna, M receive antennas.
    Simo,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Miso => "miso",
            Side::Simo => "simo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "miso" => Ok(Side::Miso),
            "simo" => Ok(Side::Simo),
            other => Err(Error::Config(format!(
                "unknown side `{other}` (expected `miso` or `simo`)"
            ))),
        }
    }
}

/// One array specification; the element radius defaults to
/// `spacing / ratio` unless overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySpec {
    pub count: usize,
    /// Element spacing `delta` [m].
    pub spacing: f64,
    /// Spacing-to-antenna-size ratio `delta/a`.
    pub ratio: f64,
    /// Explicit element radius [m]; overrides `ratio` when set.
    pub radius: Option<f64>,
    /// Element resistance [ohm].
    pub resistance: f64,
    pub orientation: Orientation,
}

impl ArraySpec {
    fn defaults() -> Self {
        Self {
            count: 16,
            spacing: 0.005,
            ratio: asymptotic_ratio(),
            radius: None,
            resistance: 50.0,
            orientation: Orientation::Colinear,
        }
    }

    /// Element radius [m] after applying the override.
    pub fn radius_a(&self) -> f64 {
        self.radius.unwrap_or(self.spacing / self.ratio)
    }

    pub fn element(&self) -> Result<ChuElement> {
        ChuElement::new(self.radius_a(), self.resistance)
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.count, self.spacing, self.orientation, self.element()?)
    }
}

/// Full experiment configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub tx: ArraySpec,
    pub rx: ArraySpec,
    /// Link distance [m]; `None` selects `30 lambda_min`.
    pub distance: Option<f64>,
    pub pathloss_alpha: f64,
    pub theta_tx: f64,
    pub theta_rx: f64,
    pub angle_convention: AngleConvention,
    pub fe: FrontEndConfig,
    /// Span for SNR sweeps [Hz].
    pub f_min: f64,
    pub f_max: f64,
    /// Points of the log-spaced span grid.
    pub span_points: usize,
    /// Points per band of the rate grid.
    pub band_points: usize,
    pub bands: BandSet,
    pub channel: ChannelModel,
    pub mode: PropagationMode,
    /// Mutual coupling on (off = weakly-coupled diagonal baseline).
    pub coupled: bool,
    /// Total power budget [W].
    pub p_max_watts: f64,
    pub seed: u64,
    pub monte_carlo_draws: usize,
    /// Keys explicitly set by the source config, for metadata echo.
    pub overrides: BTreeMap<String, String>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            tx: ArraySpec::defaults(),
            rx: ArraySpec::defaults(),
            distance: None,
            pathloss_alpha: 3.5,
            theta_tx: 0.0,
            theta_rx: 0.0,
            angle_convention: AngleConvention::CosLiteral,
            fe: FrontEndConfig::default(),
            f_min: 100e6,
            f_max: 30e9,
            span_points: 2048,
            band_points: 512,
            bands: BandSet::default(),
            channel: ChannelModel::Los,
            mode: PropagationMode::FarField,
            coupled: true,
            p_max_watts: 2.0,
            seed: 1,
            monte_carlo_draws: 100,
            overrides: BTreeMap::new(),
        }
    }
}

impl PartialEq for Scenario {
    /// Equality over the physical configuration; the override echo is
    /// provenance, not configuration.
    fn eq(&self, other: &Self) -> bool {
        self.tx == other.tx
            && self.rx == other.rx
            && self.distance == other.distance
            && self.pathloss_alpha == other.pathloss_alpha
            && self.theta_tx == other.theta_tx
            && self.theta_rx == other.theta_rx
            && self.angle_convention == other.angle_convention
            && self.fe == other.fe
            && self.f_min == other.f_min
            && self.f_max == other.f_max
            && self.span_points == other.span_points
            && self.band_points == other.band_points
            && self.bands == other.bands
            && self.channel == other.channel
            && self.mode == other.mode
            && self.coupled == other.coupled
            && self.p_max_watts == other.p_max_watts
            && self.seed == other.seed
            && self.monte_carlo_draws == other.monte_carlo_draws
    }
}

impl Scenario {
    /// Shortest wavelength on the span [m].
    pub fn lambda_min(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_max
    }

    /// Effective link distance [m].
    pub fn link_distance(&self) -> f64 {
        self.distance.unwrap_or(30.0 * self.lambda_min())
    }

    pub fn link(&self) -> Result<LinkConfig> {
        let mut link = LinkConfig::new(self.link_distance(), self.pathloss_alpha)?;
        link.theta_tx = self.theta_tx;
        link.theta_rx = self.theta_rx;
        link.angle_convention = self.angle_convention;
        Ok(link)
    }

    /// Generator-voltage power budget [V^2]: `P_max * R` converts the watt
    /// budget into the voltage-PSD domain the eigenvalues live in.
    pub fn power_budget(&self) -> f64 {
        self.p_max_watts * self.fe.generator_r
    }

    /// Flat voltage PSD [V^2/Hz] spreading the budget over the span.
    pub fn flat_density(&self) -> f64 {
        self.power_budget() / (self.f_max - self.f_min)
    }

    /// Band-restricted rate grid.
    pub fn band_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::from_bands(&self.bands, self.band_points)
    }

    /// Log-spaced span grid for SNR sweeps.
    pub fn span_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::log_spaced(self.f_min, self.f_max, self.span_points)
    }

    /// Validates every derived object this scenario will construct.
    pub fn validate(&self) -> Result<()> {
        self.tx.geometry()?;
        self.rx.geometry()?;
        self.link()?;
        FrontEndConfig::new(
            self.fe.generator_r,
            self.fe.lna_gain_beta,
            self.fe.lna_input_r,
            self.fe.noise_figure,
            self.fe.temperature,
        )?;
        if !(self.f_min > 0.0) || !(self.f_max > self.f_min) {
            return Err(Error::Validation(format!(
                "bad frequency span [{:e}, {:e}]",
                self.f_min, self.f_max
            )));
        }
        if self.span_points < 2 || self.band_points < 2 {
            return Err(Error::Validation("grids need at least 2 points".into()));
        }
        if !(self.p_max_watts > 0.0) {
            return Err(Error::Validation(format!(
                "power budget must be positive, got {:e} W",
                self.p_max_watts
            )));
        }
        if self.monte_carlo_draws == 0 {
            return Err(Error::Validation("monte_carlo_draws must be at least 1".into()));
        }
        Ok(())
    }

    fn channel_kind(&self, m: usize, n: usize, freq_index: u32, draw_index: u32) -> ChannelKind {
        match self.channel {
            ChannelModel::Los => ChannelKind::Los,
            ChannelModel::Rayleigh => {
                ChannelKind::Rayleigh(FadingDraw::generate(self.seed, freq_index, draw_index, m, n))
            }
        }
    }

    /// Geometries for a single-sided sweep: the array side gets `count`
    /// elements with the given orientation; the opposite side is one large
    /// element of radius `100 delta` so it does not limit the bandwidth.
    pub fn side_geometries(
        &self,
        side: Side,
        count: usize,
        orientation: Orientation,
    ) -> Result<(ArrayGeometry, ArrayGeometry)> {
        let array_spec = |spec: &ArraySpec| ArraySpec { count, orientation, ..*spec };
        let large_single = |spec: &ArraySpec| {
            ChuElement::new(100.0 * spec.spacing, spec.resistance).map(ArrayGeometry::single)
        };
        match side {
            Side::Miso => Ok((array_spec(&self.tx).geometry()?, large_single(&self.rx)?)),
            Side::Simo => Ok((large_single(&self.tx)?, array_spec(&self.rx).geometry()?)),
        }
    }
}

/// Solves one frequency point of a scenario.
pub fn realize_point(
    scenario: &Scenario,
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
    freq_index: u32,
    draw_index: u32,
    f: f64,
) -> Result<ChannelRealization> {
    let kind = scenario.channel_kind(rx_geom.count(), tx_geom.count(), freq_index, draw_index);
    solve_link(
        tx_geom,
        rx_geom,
        &scenario.link()?,
        &scenario.fe,
        &kind,
        scenario.mode,
        scenario.coupled,
        f,
    )
}

/// Whitened eigenvalue field over a grid, for one fading draw (ignored for
/// LoS). Frequency points evaluate in parallel; results are ordered.
pub fn lambda_field(
    scenario: &Scenario,
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
    grid: &FrequencyGrid,
    draw_index: u32,
) -> Result<LambdaField> {
    let modes: Result<Vec<Vec<f64>>> = grid
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, &f)| {
            let real = realize_point(scenario, tx_geom, rx_geom, i as u32, draw_index, f)?;
            whitened_eigenmodes(&real)
        })
        .collect();
    LambdaField::new(grid.clone(), modes?)
}

/// Band-restricted achievable rate [bits/s] of the scenario for explicit
/// geometries; Rayleigh channels average the rate over the configured
/// Monte-Carlo draws.
pub fn scenario_rate(
    scenario: &Scenario,
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
    precoding: Precoding,
) -> Result<f64> {
    let grid = scenario.band_grid()?;
    let budget = scenario.power_budget();
    match scenario.channel {
        ChannelModel::Los => {
            let field = lambda_field(scenario, tx_geom, rx_geom, &grid, 0)?;
            Ok(achievable_rate(&field, budget, precoding)?.total_rate)
        }
        ChannelModel::Rayleigh => {
            let draws = scenario.monte_carlo_draws as u32;
            // collect per-draw rates and sum in draw order so the float
            // rounding (and hence the CSV bytes) cannot depend on scheduling
            let rates: Result<Vec<f64>> = (0..draws)
                .into_par_iter()
                .map(|draw| {
                    let field = lambda_field(scenario, tx_geom, rx_geom, &grid, draw)?;
                    Ok(achievable_rate(&field, budget, precoding)?.total_rate)
                })
                .collect();
            Ok(rates?.iter().sum::<f64>() / draws as f64)
        }
    }
}

/// Full rate result (eigenvalues, powers, water level) for one draw.
pub fn scenario_rate_detail(
    scenario: &Scenario,
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
    precoding: Precoding,
    draw_index: u32,
) -> Result<RateResult> {
    let grid = scenario.band_grid()?;
    let field = lambda_field(scenario, tx_geom, rx_geom, &grid, draw_index)?;
    achievable_rate(&field, scenario.power_budget(), precoding)
}

/// Beamforming SNR curve over the span grid: per-point `(f, Result<snr>)`,
/// linear scale. Rayleigh scenarios average the SNR over the Monte-Carlo
/// draws.
pub fn snr_curve(
    scenario: &Scenario,
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
) -> Result<Vec<(f64, Result<f64>)>> {
    let grid = scenario.span_grid()?;
    let density = scenario.flat_density();
    let draws = match scenario.channel {
        ChannelModel::Los => 1u32,
        ChannelModel::Rayleigh => scenario.monte_carlo_draws as u32,
    };
    Ok(grid
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, &f)| {
            let snr = (0..draws)
                .map(|draw| {
                    let real = realize_point(scenario, tx_geom, rx_geom, i as u32, draw, f)?;
                    crate::rate::beamforming_snr(&real, density)
                })
                .try_fold(0.0, |acc, r: Result<f64>| r.map(|v| acc + v))
                .map(|total| total / draws as f64);
            (f, snr)
        })
        .collect())
}

/// One structural-invariant check over a randomized scenario corpus.
#[derive(Debug, Clone)]
pub struct InvariantReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs the structural invariant suite on `cases` randomized scenarios
/// derived from this scenario's seed: symmetric Toeplitz impedance blocks,
/// Hermitian PSD noise covariance, rank-1 LoS channels, unit-modulus
/// steering vectors, far-field/bilateral agreement at zero transimpedance,
/// and fixed-seed determinism.
pub fn run_invariant_suite(scenario: &Scenario, cases: usize) -> Result<Vec<InvariantReport>> {
    use crate::coupling::array_impedance;
    use crate::network::{channel_matrix, noise_covariance, MultiportBlocks};
    use crate::propagation::steering_vector;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    let mut toeplitz = InvariantReport { name: "impedance-symmetric-toeplitz", cases, failures: 0, detail: String::new() };
    let mut psd = InvariantReport { name: "noise-hermitian-psd", cases, failures: 0, detail: String::new() };
    let mut rank1 = InvariantReport { name: "los-rank-one", cases, failures: 0, detail: String::new() };
    let mut steering = InvariantReport { name: "steering-unit-modulus", cases, failures: 0, detail: String::new() };
    let mut ff_nf = InvariantReport { name: "ff-nf-agree-at-zero-transimpedance", cases, failures: 0, detail: String::new() };
    let mut determinism = InvariantReport { name: "fixed-seed-determinism", cases, failures: 0, detail: String::new() };

    let mut state = scenario.seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
    let mut uniform = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };

    for case in 0..cases {
        let n = 1 + (uniform() * 5.0) as usize;
        let m = 1 + (uniform() * 5.0) as usize;
        let orientation = if uniform() < 0.5 { Orientation::Colinear } else { Orientation::Parallel };
        let coupled = uniform() < 0.8;
        let ratio = 1.4 + 2.4 * uniform();
        let f = scenario.f_min * (scenario.f_max / scenario.f_min).powf(uniform());
        let theta = (uniform() - 0.5) * std::f64::consts::PI;

        let mut sc = scenario.clone();
        sc.tx = ArraySpec { count: n, ratio, orientation, ..sc.tx };
        sc.rx = ArraySpec { count: m, ratio, orientation, ..sc.rx };
        sc.coupled = coupled;
        sc.channel = ChannelModel::Los;
        let tx_geom = sc.tx.geometry()?;
        let rx_geom = sc.rx.geometry()?;

        // symmetric Toeplitz structure with the self-impedance diagonal
        let z = array_impedance(&tx_geom, f, coupled)?;
        let mut ok = z.validate_symmetric(1e-12).is_ok();
        ok &= z.entries[(0, 0)] == tx_geom.element().self_impedance(f)?;
        for p in 0..n {
            for q in 0..n {
                if (z.entries[(p, q)] - z.entries[(0, p.abs_diff(q))]).norm() > 1e-12 {
                    ok = false;
                }
            }
        }
        if !ok {
            toeplitz.failures += 1;
            toeplitz.detail = format!("case {case}: n={n} f={f:.3e}");
        }

        // noise covariance Hermitian PSD and LoS rank 1
        match realize_point(&sc, &tx_geom, &rx_geom, 0, 0, f) {
            Ok(real) => {
                let herm_dev = (&real.r_n - real.r_n.adjoint()).norm();
                let eig = real.r_n.clone().symmetric_eigen();
                let lam_max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lam_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
                if herm_dev > 1e-12 * real.r_n.norm() || lam_min < -1e-9 * lam_max {
                    psd.failures += 1;
                    psd.detail = format!("case {case}: lam_min={lam_min:.3e}");
                }
                let svd = real.h.clone().svd(false, false);
                let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
                s.sort_by(|a, b| b.partial_cmp(a).unwrap());
                if s.len() > 1 && s[1] > 1e-10 * s[0] {
                    rank1.failures += 1;
                    rank1.detail = format!("case {case}: s1/s0={:.3e}", s[1] / s[0]);
                }
            }
            Err(e) => {
                psd.failures += 1;
                psd.detail = format!("case {case}: solve failed: {e}");
            }
        }

        // steering entries stay on the unit circle
        let v = steering_vector(n, sc.tx.spacing, theta, f);
        if v.iter().any(|z| (z.norm() - 1.0).abs() > 1e-12) {
            steering.failures += 1;
            steering.detail = format!("case {case}");
        }

        // FF and NF closed forms coincide once both transimpedance blocks vanish
        let zero_rt = DMatrix::from_element(m, n, Complex64::new(0.0, 0.0));
        let blocks = MultiportBlocks::new(
            f,
            array_impedance(&tx_geom, f, coupled)?.entries,
            array_impedance(&rx_geom, f, coupled)?.entries,
            zero_rt,
        )?;
        let h_ff = channel_matrix(&blocks, &sc.fe, PropagationMode::FarField)?;
        let h_nf = channel_matrix(&blocks, &sc.fe, PropagationMode::NearField)?;
        let n_ff = noise_covariance(&blocks, &sc.fe, PropagationMode::FarField)?;
        let n_nf = noise_covariance(&blocks, &sc.fe, PropagationMode::NearField)?;
        if h_ff != h_nf || n_ff != n_nf {
            ff_nf.failures += 1;
            ff_nf.detail = format!("case {case}");
        }

        // identical seeds reproduce identical Rayleigh realizations
        let mut ray = sc.clone();
        ray.channel = ChannelModel::Rayleigh;
        let a = realize_point(&ray, &tx_geom, &rx_geom, case as u32, 3, f)?;
        let b = realize_point(&ray, &tx_geom, &rx_geom, case as u32, 3, f)?;
        if a.h != b.h || a.r_n != b.r_n {
            determinism.failures += 1;
            determinism.detail = format!("case {case}");
        }
    }

    Ok(vec![toeplitz, psd, rank1, steering, ff_nf, determinism])
}
