//! Sweep orchestration and CSV output.
//!
//! Every sweep produces a [`ResultTable`]: typed rows plus metadata lines
//! echoing the tool version, seed, explicit overrides, and the full
//! scenario, so a table can be re-run without the original config file.
//! Failed sweep points are flushed as marker rows (NaN values, error text
//! in the `status` column) rather than aborting the whole table.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::coupling::Orientation;
use crate::rate::Precoding;
use crate::tightcoupling::{
    asymptotic_ratio, optimum_ratio_sweep, tight_coupling_root, ArrayExtent, TightCouplingReport,
    RATIO_SEARCH_RANGE,
};
use crate::{Error, Result};

use super::{config::serialize_scenario, scenario_rate, snr_curve, Scenario, Side};

/// Experiment axes for [`run_sweep`].
#[derive(Debug, Clone)]
pub enum SweepSpec {
    /// Beamforming SNR over the span grid, per (orientation, count).
    SnrVsFrequency { side: Side, counts: Vec<usize>, orientations: Vec<Orientation> },
    /// Band-restricted rate over the spacing-to-antenna-size ratio.
    RateVsRatio {
        side: Side,
        counts: Vec<usize>,
        ratios: Vec<f64>,
        orientations: Vec<Orientation>,
    },
    /// Rate over the (N, M) element-count plane.
    HeatmapNm { n_list: Vec<usize>, m_list: Vec<usize>, power_factor: f64 },
    /// Tight-coupling report: asymptotic constant, finite-array reactance
    /// roots, and optionally the rate-sweep optimum ratio per count.
    TightCoupling {
        counts: Vec<usize>,
        k0_delta: f64,
        ratio_points: usize,
        with_rate_sweep: bool,
    },
}

impl SweepSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SweepSpec::SnrVsFrequency { .. } => "snr-vs-frequency",
            SweepSpec::RateVsRatio { .. } => "rate-vs-ratio",
            SweepSpec::HeatmapNm { .. } => "heatmap-nm",
            SweepSpec::TightCoupling { .. } => "tight-coupling",
        }
    }

    /// Evenly spaced ratio grid over the search range.
    pub fn ratio_grid(points: usize) -> Vec<f64> {
        let (lo, hi) = RATIO_SEARCH_RANGE;
        (0..points.max(2))
            .map(|i| lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64)
            .collect()
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // 12 significant digits
            Cell::Float(v) => format!("{v:.11e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// A sweep result: named columns, typed rows, and metadata echo lines.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub sweep: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Lines emitted with a `# ` prefix ahead of the header.
    pub metadata: Vec<String>,
}

impl ResultTable {
    fn new(sweep: &'static str, columns: Vec<&'static str>, scenario: &Scenario) -> Self {
        let mut metadata = vec![
            format!("tool = tcmimo {}", env!("CARGO_PKG_VERSION")),
            format!("sweep = {sweep}"),
            format!("seed = {}", scenario.seed),
        ];
        for (key, value) in &scenario.overrides {
            metadata.push(format!("override: {key} = {value}"));
        }
        for line in serialize_scenario(scenario).lines() {
            metadata.push(format!("config: {line}"));
        }
        Self { sweep, columns, rows: Vec::new(), metadata }
    }

    /// Whether any row carries a failure marker.
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|row| {
            matches!(row.last(), Some(Cell::Text(status)) if status != "ok")
        })
    }
}

fn status_ok() -> Cell {
    Cell::Text("ok".to_string())
}

fn status_err(e: &Error) -> Cell {
    Cell::Text(e.to_string().replace([',', '\n'], ";"))
}

/// Runs one sweep against a scenario.
pub fn run_sweep(spec: &SweepSpec, scenario: &Scenario) -> Result<ResultTable> {
    match spec {
        SweepSpec::SnrVsFrequency { side, counts, orientations } => {
            snr_sweep(scenario, *side, counts, orientations)
        }
        SweepSpec::RateVsRatio { side, counts, ratios, orientations } => {
            rate_vs_ratio_sweep(scenario, *side, counts, ratios, orientations)
        }
        SweepSpec::HeatmapNm { n_list, m_list, power_factor } => {
            heatmap_sweep(scenario, n_list, m_list, *power_factor)
        }
        SweepSpec::TightCoupling { counts, k0_delta, ratio_points, with_rate_sweep } => {
            tight_coupling_sweep(scenario, counts, *k0_delta, *ratio_points, *with_rate_sweep)
        }
    }
}

fn axes_nonempty(len: usize, what: &str) -> Result<()> {
    if len == 0 {
        return Err(Error::Validation(format!("{what} axis must be non-empty")));
    }
    Ok(())
}

fn snr_sweep(
    scenario: &Scenario,
    side: Side,
    counts: &[usize],
    orientations: &[Orientation],
) -> Result<ResultTable> {
    axes_nonempty(counts.len(), "count")?;
    axes_nonempty(orientations.len(), "orientation")?;
    let mut table = ResultTable::new(
        "snr-vs-frequency",
        vec!["orientation", "count", "f_hz", "snr_db", "status"],
        scenario,
    );
    table.metadata.push(format!("side = {}", side.name()));
    for &orientation in orientations {
        for &count in counts {
            let head = |row: &mut Vec<Cell>| {
                row.push(Cell::Text(orientation.name().to_string()));
                row.push(Cell::Int(count as i64));
            };
            match scenario
                .side_geometries(side, count, orientation)
                .and_then(|(tx, rx)| snr_curve(scenario, &tx, &rx))
            {
                Ok(points) => {
                    for (f, snr) in points {
                        let mut row = Vec::with_capacity(5);
                        head(&mut row);
                        row.push(Cell::Float(f));
                        match snr {
                            Ok(value) => {
                                row.push(Cell::Float(10.0 * value.log10()));
                                row.push(status_ok());
                            }
                            Err(e) => {
                                row.push(Cell::Float(f64::NAN));
                                row.push(status_err(&e));
                            }
                        }
                        table.rows.push(row);
                    }
                }
                Err(e) => {
                    let mut row = Vec::with_capacity(5);
                    head(&mut row);
                    row.push(Cell::Float(f64::NAN));
                    row.push(Cell::Float(f64::NAN));
                    row.push(status_err(&e));
                    table.rows.push(row);
                }
            }
        }
    }
    Ok(table)
}

/// Rate at one (count, ratio) cell of a single-sided ratio sweep.
fn rate_at_ratio(
    scenario: &Scenario,
    side: Side,
    orientation: Orientation,
    count: usize,
    ratio: f64,
) -> Result<f64> {
    let mut sc = scenario.clone();
    sc.tx.ratio = ratio;
    sc.tx.radius = None;
    sc.rx.ratio = ratio;
    sc.rx.radius = None;
    let (tx, rx) = sc.side_geometries(side, count, orientation)?;
    scenario_rate(&sc, &tx, &rx, Precoding::Optimum)
}

fn rate_vs_ratio_sweep(
    scenario: &Scenario,
    side: Side,
    counts: &[usize],
    ratios: &[f64],
    orientations: &[Orientation],
) -> Result<ResultTable> {
    axes_nonempty(counts.len(), "count")?;
    axes_nonempty(ratios.len(), "ratio")?;
    axes_nonempty(orientations.len(), "orientation")?;
    let mut table = ResultTable::new(
        "rate-vs-ratio",
        vec!["orientation", "count", "ratio", "rate_bits_per_s", "status"],
        scenario,
    );
    table.metadata.push(format!("side = {}", side.name()));
    for &orientation in orientations {
        for &count in counts {
            for &ratio in ratios {
                let mut row = vec![
                    Cell::Text(orientation.name().to_string()),
                    Cell::Int(count as i64),
                    Cell::Float(ratio),
                ];
                match rate_at_ratio(scenario, side, orientation, count, ratio) {
                    Ok(rate) => {
                        row.push(Cell::Float(rate));
                        row.push(status_ok());
                    }
                    Err(e) => {
                        row.push(Cell::Float(f64::NAN));
                        row.push(status_err(&e));
                    }
                }
                table.rows.push(row);
            }
        }
    }
    Ok(table)
}

fn heatmap_sweep(
    scenario: &Scenario,
    n_list: &[usize],
    m_list: &[usize],
    power_factor: f64,
) -> Result<ResultTable> {
    axes_nonempty(n_list.len(), "N")?;
    axes_nonempty(m_list.len(), "M")?;
    if !(power_factor > 0.0) {
        return Err(Error::Validation(format!("power factor must be positive, got {power_factor:e}")));
    }
    let mut sc = scenario.clone();
    sc.p_max_watts *= power_factor;
    let mut table = ResultTable::new(
        "heatmap-nm",
        vec!["n", "m", "rate_bits_per_s", "status"],
        scenario,
    );
    table.metadata.push(format!("power_factor = {power_factor}"));
    for &n in n_list {
        for &m in m_list {
            let mut row = vec![Cell::Int(n as i64), Cell::Int(m as i64)];
            let result = (|| -> Result<f64> {
                let tx = super::ArraySpec { count: n, ..sc.tx }.geometry()?;
                let rx = super::ArraySpec { count: m, ..sc.rx }.geometry()?;
                scenario_rate(&sc, &tx, &rx, Precoding::Optimum)
            })();
            match result {
                Ok(rate) => {
                    row.push(Cell::Float(rate));
                    row.push(status_ok());
                }
                Err(e) => {
                    row.push(Cell::Float(f64::NAN));
                    row.push(status_err(&e));
                }
            }
            table.rows.push(row);
        }
    }
    Ok(table)
}

/// Computes the tight-coupling report for a scenario.
pub fn tight_coupling_report(
    scenario: &Scenario,
    counts: &[usize],
    k0_delta: f64,
    ratio_points: usize,
    with_rate_sweep: bool,
) -> Result<TightCouplingReport> {
    let finite_roots: Result<Vec<(usize, f64)>> = counts
        .iter()
        .map(|&n| tight_coupling_root(k0_delta, ArrayExtent::Finite(n)).map(|r| (n, r)))
        .collect();
    let sweep_optimum = if with_rate_sweep {
        let ratios = SweepSpec::ratio_grid(ratio_points);
        optimum_ratio_sweep(&ratios, counts, |n, ratio| {
            rate_at_ratio(scenario, Side::Miso, Orientation::Colinear, n, ratio)
                .unwrap_or(f64::NEG_INFINITY)
        })?
    } else {
        Vec::new()
    };
    Ok(TightCouplingReport {
        asymptotic_ratio: asymptotic_ratio(),
        finite_roots: finite_roots?,
        sweep_optimum,
    })
}

fn tight_coupling_sweep(
    scenario: &Scenario,
    counts: &[usize],
    k0_delta: f64,
    ratio_points: usize,
    with_rate_sweep: bool,
) -> Result<ResultTable> {
    axes_nonempty(counts.len(), "count")?;
    let report = tight_coupling_report(scenario, counts, k0_delta, ratio_points, with_rate_sweep)?;
    let mut table = ResultTable::new(
        "tight-coupling",
        vec!["quantity", "count", "value", "status"],
        scenario,
    );
    table.metadata.push(format!("k0_delta = {k0_delta}"));
    table.rows.push(vec![
        Cell::Text("asymptotic_ratio".to_string()),
        Cell::Int(0),
        Cell::Float(report.asymptotic_ratio),
        status_ok(),
    ]);
    for (n, root) in &report.finite_roots {
        table.rows.push(vec![
            Cell::Text("finite_root".to_string()),
            Cell::Int(*n as i64),
            Cell::Float(*root),
            status_ok(),
        ]);
    }
    for (n, ratio) in &report.sweep_optimum {
        let status = if ratio.is_finite() {
            status_ok()
        } else {
            Cell::Text("rate sweep failed".to_string())
        };
        table.rows.push(vec![
            Cell::Text("sweep_argmax".to_string()),
            Cell::Int(*n as i64),
            Cell::Float(*ratio),
            status,
        ]);
    }
    Ok(table)
}

/// Writes a table as CSV: `# `-prefixed metadata, a header line, then one
/// record per row with floats at 12 significant digits. The timestamp line
/// is optional so outputs can be byte-reproducible.
pub fn emit_table(
    table: &ResultTable,
    out: &mut dyn Write,
    include_timestamp: bool,
) -> std::io::Result<()> {
    for (i, line) in table.metadata.iter().enumerate() {
        writeln!(out, "# {line}")?;
        if i == 0 && include_timestamp {
            let stamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            writeln!(out, "# timestamp = {stamp}")?;
        }
    }
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::render).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
