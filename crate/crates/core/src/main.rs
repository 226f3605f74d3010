//! Command-line front end: configure a scenario, run a sweep, emit CSV.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tcmimo::coupling::Orientation;
use tcmimo::scenario::{
    self, emit_table, parse_scenario, run_sweep, run_invariant_suite, Scenario, Side, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "tcmimo",
    version,
    about = "Circuit-level simulator for tightly-coupled massive MIMO arrays",
    after_help = "Scenario keys (for --config files and --set overrides) are flat `key = value` \
                  pairs; run `tcmimo keys` to list them."
)]
struct Cli {
    /// Scenario config file (flat key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Inline scenario overrides, e.g. --set tx.count=64 --set channel=rayleigh.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output CSV path (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Suppress the timestamp metadata line (byte-reproducible output).
    #[arg(long, global = true)]
    no_timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SideArgs {
    /// Array side: miso (transmit array) or simo (receive array).
    #[arg(long, default_value = "miso")]
    side: String,

    /// Element orientations to sweep.
    #[arg(long, value_delimiter = ',', default_value = "colinear,parallel")]
    orientations: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Beamforming SNR vs frequency over the span grid.
    SnrSweep {
        #[command(flatten)]
        side: SideArgs,
        /// Element counts to sweep.
        #[arg(long, value_delimiter = ',', default_value = "1,4,16,64")]
        counts: Vec<usize>,
    },
    /// Achievable rate vs spacing-to-antenna-size ratio.
    RateVsRatio {
        #[command(flatten)]
        side: SideArgs,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
        counts: Vec<usize>,
        /// Points of the ratio grid on [4/3, 4].
        #[arg(long, default_value_t = 64)]
        ratio_points: usize,
    },
    /// Achievable rate over the (N, M) element-count plane.
    Heatmap {
        #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
        m_list: Vec<usize>,
        /// Multiplies the configured power budget (e.g. 2000 for the
        /// high-SNR regime).
        #[arg(long, default_value_t = 1.0)]
        power_factor: f64,
    },
    /// Tight-coupling report: asymptotic ratio and finite-array roots;
    /// --sweep adds the rate-based optimum ratio per count.
    TightCoupling {
        #[arg(long, value_delimiter = ',', default_value = "4,16,64,256")]
        counts: Vec<usize>,
        /// Electrical spacing k0*delta of the reactance sums.
        #[arg(long, default_value_t = 1e-3)]
        k0_delta: f64,
        /// Also run the rate sweep (slow).
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 64)]
        ratio_points: usize,
    },
    /// Run the structural invariant suite against the scenario.
    Validate {
        /// Randomized cases to draw.
        #[arg(long, default_value_t = 200)]
        cases: usize,
    },
    /// Export the configured array impedance matrix at one frequency, or
    /// validate an externally produced impedance table (--check).
    Impedance {
        /// Evaluation frequency [Hz].
        #[arg(long, default_value_t = 2.5e9)]
        frequency: f64,
        /// Which array to export: tx or rx.
        #[arg(long, default_value = "tx")]
        array: String,
        /// Parse and validate this table instead of exporting.
        #[arg(long)]
        check: Option<PathBuf>,
    },
    /// List the accepted scenario configuration keys.
    Keys,
}

fn build_scenario(cli: &Cli) -> tcmimo::Result<Scenario> {
    let mut text = match &cli.config {
        Some(path) => fs::read_to_string(path)?,
        None => String::new(),
    };
    for setting in &cli.set {
        let line = setting.replacen('=', " = ", 1);
        text.push('\n');
        text.push_str(&line);
    }
    let mut scenario = parse_scenario(&text)?;
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
        scenario.overrides.insert("seed".to_string(), seed.to_string());
    }
    Ok(scenario)
}

fn parse_orientations(names: &[String]) -> tcmimo::Result<Vec<Orientation>> {
    names.iter().map(|s| Orientation::parse(s)).collect()
}

fn write_output(cli: &Cli, table: &scenario::ResultTable) -> std::io::Result<()> {
    match &cli.out {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            emit_table(table, &mut file, !cli.no_timestamp)?;
            file.flush()
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_table(table, &mut lock, !cli.no_timestamp)?;
            lock.flush()
        }
    }
}

fn run(cli: &Cli) -> Result<bool, String> {
    if matches!(cli.command, Command::Keys) {
        for key in scenario::valid_keys() {
            println!("{key}");
        }
        return Ok(true);
    }

    let scenario = build_scenario(cli).map_err(|e| e.to_string())?;

    if let Command::Validate { cases } = cli.command {
        let reports = run_invariant_suite(&scenario, cases).map_err(|e| e.to_string())?;
        let mut all_ok = true;
        for r in &reports {
            if r.passed() {
                println!("PASS {} ({} cases)", r.name, r.cases);
            } else {
                println!("FAIL {} ({} of {} cases): {}", r.name, r.failures, r.cases, r.detail);
                all_ok = false;
            }
        }
        return Ok(all_ok);
    }

    if let Command::Impedance { frequency, ref array, ref check } = cli.command {
        if let Some(path) = check {
            let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
            let matrix =
                tcmimo::coupling::load_impedance_matrix(&text).map_err(|e| e.to_string())?;
            println!(
                "OK {}x{} impedance table at {:.6e} Hz (reciprocity within tolerance)",
                matrix.dim(),
                matrix.dim(),
                matrix.frequency
            );
            return Ok(true);
        }
        let geometry = match array.as_str() {
            "tx" => scenario.tx.geometry(),
            "rx" => scenario.rx.geometry(),
            other => return Err(format!("unknown array `{other}` (expected `tx` or `rx`)")),
        }
        .map_err(|e| e.to_string())?;
        let matrix = tcmimo::coupling::array_impedance(&geometry, frequency, scenario.coupled)
            .map_err(|e| e.to_string())?;
        let table = matrix.to_table();
        match &cli.out {
            Some(path) => fs::write(path, table).map_err(|e| e.to_string())?,
            None => print!("{table}"),
        }
        return Ok(true);
    }

    let spec = match &cli.command {
        Command::SnrSweep { side, counts } => SweepSpec::SnrVsFrequency {
            side: Side::parse(&side.side).map_err(|e| e.to_string())?,
            counts: counts.clone(),
            orientations: parse_orientations(&side.orientations).map_err(|e| e.to_string())?,
        },
        Command::RateVsRatio { side, counts, ratio_points } => SweepSpec::RateVsRatio {
            side: Side::parse(&side.side).map_err(|e| e.to_string())?,
            counts: counts.clone(),
            ratios: SweepSpec::ratio_grid(*ratio_points),
            orientations: parse_orientations(&side.orientations).map_err(|e| e.to_string())?,
        },
        Command::Heatmap { n_list, m_list, power_factor } => SweepSpec::HeatmapNm {
            n_list: n_list.clone(),
            m_list: m_list.clone(),
            power_factor: *power_factor,
        },
        Command::TightCoupling { counts, k0_delta, sweep, ratio_points } => {
            SweepSpec::TightCoupling {
                counts: counts.clone(),
                k0_delta: *k0_delta,
                ratio_points: *ratio_points,
                with_rate_sweep: *sweep,
            }
        }
        Command::Validate { .. } | Command::Impedance { .. } | Command::Keys => unreachable!(),
    };

    let table = run_sweep(&spec, &scenario).map_err(|e| e.to_string())?;
    write_output(cli, &table).map_err(|e| e.to_string())?;
    Ok(!table.has_failures())
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: could not size the thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }

    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
