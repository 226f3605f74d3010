//! Flat key-value scenario configuration.
//!
//! The format is one `key = value` pair per line with dotted sections
//! (`tx.count = 16`), `#` comments, and blank lines. Unset keys keep the
//! reference defaults. `serialize_scenario` emits every key in a fixed
//! order so the metadata echo in CSV headers is line-for-line diffable.

use std::collections::BTreeMap;

use crate::coupling::Orientation;
use crate::network::PropagationMode;
use crate::propagation::AngleConvention;
use crate::rate::BandSet;
use crate::{Error, Result};

use super::{ArraySpec, ChannelModel, Scenario};

const KEYS: &[&str] = &[
    "tx.count",
    "tx.spacing",
    "tx.ratio",
    "tx.radius",
    "tx.resistance",
    "tx.orientation",
    "rx.count",
    "rx.spacing",
    "rx.ratio",
    "rx.radius",
    "rx.resistance",
    "rx.orientation",
    "ratio",
    "orientation",
    "link.distance",
    "link.alpha",
    "link.theta_tx",
    "link.theta_rx",
    "angle_convention",
    "fe.generator_r",
    "fe.lna_beta",
    "fe.lna_r_in",
    "fe.noise_figure",
    "fe.temperature",
    "grid.f_min",
    "grid.f_max",
    "grid.span_points",
    "grid.band_points",
    "bands",
    "channel",
    "mode",
    "coupled",
    "p_max",
    "seed",
    "draws",
];

/// The accepted configuration keys, for diagnostics.
pub fn valid_keys() -> &'static [&'static str] {
    KEYS
}

/// Parses a configuration document into a validated [`Scenario`]; unset
/// keys fall back to the reference defaults.
pub fn parse_scenario(source: &str) -> Result<Scenario> {
    let mut scenario = Scenario::default();
    let mut overrides = BTreeMap::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`, got `{line}`", idx + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut scenario, key, value)
            .map_err(|e| Error::Config(format!("line {}: {e}", idx + 1)))?;
        overrides.insert(key.to_string(), value.to_string());
    }
    scenario.overrides = overrides;
    scenario.validate()?;
    Ok(scenario)
}

/// Applies one `key = value` override to a scenario (validation deferred).
pub fn apply_key(sc: &mut Scenario, key: &str, value: &str) -> Result<()> {
    match key {
        "tx.count" => sc.tx.count = parse_num::<usize>(key, value)?,
        "tx.spacing" => sc.tx.spacing = parse_num(key, value)?,
        "tx.ratio" => sc.tx.ratio = parse_num(key, value)?,
        "tx.radius" => sc.tx.radius = parse_optional(key, value)?,
        "tx.resistance" => sc.tx.resistance = parse_num(key, value)?,
        "tx.orientation" => sc.tx.orientation = Orientation::parse(value)?,
        "rx.count" => sc.rx.count = parse_num::<usize>(key, value)?,
        "rx.spacing" => sc.rx.spacing = parse_num(key, value)?,
        "rx.ratio" => sc.rx.ratio = parse_num(key, value)?,
        "rx.radius" => sc.rx.radius = parse_optional(key, value)?,
        "rx.resistance" => sc.rx.resistance = parse_num(key, value)?,
        "rx.orientation" => sc.rx.orientation = Orientation::parse(value)?,
        "ratio" => {
            let r = parse_num(key, value)?;
            sc.tx.ratio = r;
            sc.rx.ratio = r;
        }
        "orientation" => {
            let o = Orientation::parse(value)?;
            sc.tx.orientation = o;
            sc.rx.orientation = o;
        }
        "link.distance" => sc.distance = parse_optional(key, value)?,
        "link.alpha" => sc.pathloss_alpha = parse_num(key, value)?,
        "link.theta_tx" => sc.theta_tx = parse_num(key, value)?,
        "link.theta_rx" => sc.theta_rx = parse_num(key, value)?,
        "angle_convention" => sc.angle_convention = AngleConvention::parse(value)?,
        "fe.generator_r" => sc.fe.generator_r = parse_num(key, value)?,
        "fe.lna_beta" => sc.fe.lna_gain_beta = parse_num(key, value)?,
        "fe.lna_r_in" => sc.fe.lna_input_r = parse_num(key, value)?,
        "fe.noise_figure" => sc.fe.noise_figure = parse_num(key, value)?,
        "fe.temperature" => sc.fe.temperature = parse_num(key, value)?,
        "grid.f_min" => sc.f_min = parse_num(key, value)?,
        "grid.f_max" => sc.f_max = parse_num(key, value)?,
        "grid.span_points" => sc.span_points = parse_num::<usize>(key, value)?,
        "grid.band_points" => sc.band_points = parse_num::<usize>(key, value)?,
        "bands" => sc.bands = parse_bands(value)?,
        "channel" => sc.channel = ChannelModel::parse(value)?,
        "mode" => sc.mode = PropagationMode::parse(value)?,
        "coupled" => sc.coupled = parse_bool(key, value)?,
        "p_max" => sc.p_max_watts = parse_num(key, value)?,
        "seed" => sc.seed = parse_num::<u64>(key, value)?,
        "draws" => sc.monte_carlo_draws = parse_num::<usize>(key, value)?,
        unknown => {
            return Err(Error::Config(format!(
                "unknown key `{unknown}`; valid keys: {}",
                KEYS.join(", ")
            )))
        }
    }
    Ok(())
}

/// Serializes every key of a scenario in fixed order; parsing the output
/// reproduces an equal scenario.
pub fn serialize_scenario(sc: &Scenario) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| format!("{x}"));
    let array = |name: &str, spec: &ArraySpec| {
        format!(
            "{name}.count = {}\n{name}.spacing = {}\n{name}.ratio = {}\n{name}.radius = {}\n\
             {name}.resistance = {}\n{name}.orientation = {}\n",
            spec.count,
            spec.spacing,
            spec.ratio,
            opt(spec.radius),
            spec.resistance,
            spec.orientation.name()
        )
    };
    let bands: Vec<String> = sc
        .bands
        .bands()
        .iter()
        .map(|(lo, hi)| format!("{lo}:{hi}"))
        .collect();
    let mut out = String::new();
    out.push_str(&array("tx", &sc.tx));
    out.push_str(&array("rx", &sc.rx));
    out.push_str(&format!("link.distance = {}\n", opt(sc.distance)));
    out.push_str(&format!("link.alpha = {}\n", sc.pathloss_alpha));
    out.push_str(&format!("link.theta_tx = {}\n", sc.theta_tx));
    out.push_str(&format!("link.theta_rx = {}\n", sc.theta_rx));
    out.push_str(&format!("angle_convention = {}\n", sc.angle_convention.name()));
    out.push_str(&format!("fe.generator_r = {}\n", sc.fe.generator_r));
    out.push_str(&format!("fe.lna_beta = {}\n", sc.fe.lna_gain_beta));
    out.push_str(&format!("fe.lna_r_in = {}\n", sc.fe.lna_input_r));
    out.push_str(&format!("fe.noise_figure = {}\n", sc.fe.noise_figure));
    out.push_str(&format!("fe.temperature = {}\n", sc.fe.temperature));
    out.push_str(&format!("grid.f_min = {}\n", sc.f_min));
    out.push_str(&format!("grid.f_max = {}\n", sc.f_max));
    out.push_str(&format!("grid.span_points = {}\n", sc.span_points));
    out.push_str(&format!("grid.band_points = {}\n", sc.band_points));
    out.push_str(&format!("bands = {}\n", bands.join(",")));
    out.push_str(&format!("channel = {}\n", sc.channel.name()));
    out.push_str(&format!("mode = {}\n", sc.mode.name()));
    out.push_str(&format!("coupled = {}\n", sc.coupled));
    out.push_str(&format!("p_max = {}\n", sc.p_max_watts));
    out.push_str(&format!("seed = {}\n", sc.seed));
    out.push_str(&format!("draws = {}\n", sc.monte_carlo_draws));
    out
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| Error::Config(format!("bad value `{value}` for `{key}`: {e}")))
}

fn parse_optional(key: &str, value: &str) -> Result<Option<f64>> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse_num(key, value).map(Some)
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("bad boolean `{other}` for `{key}`"))),
    }
}

fn parse_bands(value: &str) -> Result<BandSet> {
    let mut bands = Vec::new();
    for part in value.split(',') {
        let (lo, hi) = part
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("band `{part}` must be `lo:hi` in Hz")))?;
        bands.push((parse_num::<f64>("bands", lo.trim())?, parse_num::<f64>("bands", hi.trim())?));
    }
    BandSet::new(bands).map_err(|e| Error::Config(format!("bad bands: {e}")))
}
