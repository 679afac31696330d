//! Cartesian sweeps over scenario keys.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{CompensationMode, ScenarioConfig};
use super::experiment::run_experiment;
use super::output::emit_results;
use crate::error::{Error, Result};

pub const SWEEP_SUMMARY_FILE: &str = "sweep.json";

/// One `key=v1,v2,…` axis; `key` is a dotted TOML path such as `users.count`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

pub fn parse_axis(arg: &str) -> Result<SweepAxis> {
    let (key, values) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("sweep axis `{arg}` is not of the form key=v1,v2")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("sweep axis `{arg}` has an empty key")));
    }
    let values: Vec<toml::Value> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(parse_value)
        .collect();
    if values.is_empty() {
        return Err(Error::Config(format!("sweep axis `{key}` has no values")));
    }
    Ok(SweepAxis { key: key.to_string(), values })
}

/// TOML literal if it parses as one, bare string otherwise.
fn parse_value(text: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

/// Sets `key` in the serialized config and re-validates the result.
pub fn apply_override(cfg: &ScenarioConfig, key: &str, value: &toml::Value) -> Result<ScenarioConfig> {
    let mut root: toml::Table = toml::from_str(&cfg.to_toml()).map_err(|e| Error::Config(e.to_string()))?;
    let mut parts = key.split('.').peekable();
    let mut table = &mut root;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            let value = match (table.get(part), value) {
                // Integers given for float keys.
                (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
                _ => value.clone(),
            };
            table.insert(part.to_string(), value);
        } else {
            table = table
                .entry(part)
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("sweep key `{key}`: `{part}` is not a section")))?;
        }
    }
    let mut out: ScenarioConfig = root
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(format!("sweep key `{key}`: {e}")))?;
    out.validate()?;
    // Paths were already resolved when the base config was loaded.
    out.resolve_paths(Path::new("."));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// Directory name under the sweep output root.
    pub name: String,
    pub settings: Vec<(String, String)>,
    pub modes: Vec<CellMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMode {
    pub mode: CompensationMode,
    pub qar: f64,
    pub sum_rate: f64,
    pub ee: f64,
    pub power: f64,
    pub delta_omega_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub axes: Vec<String>,
    pub cells: Vec<SweepCell>,
}

fn display(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs every combination of axis values; cell `i` goes to `dir/cell-<i>-<settings>`.
pub fn run_sweep(base: &ScenarioConfig, axes: &[SweepAxis], dir: impl AsRef<Path>) -> Result<SweepSummary> {
    let dir = dir.as_ref();
    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for axis in axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (0..axis.values.len()).map(move |j| {
                    let mut next = c.clone();
                    next.push(j);
                    next
                })
            })
            .collect();
    }
    // Validate every cell before running any of them.
    let configs = combos
        .iter()
        .map(|combo| {
            let mut cfg = base.clone();
            for (axis, &j) in axes.iter().zip(combo) {
                cfg = apply_override(&cfg, &axis.key, &axis.values[j])?;
            }
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(configs.len());
    for (i, (combo, cfg)) in combos.iter().zip(&configs).enumerate() {
        let settings: Vec<(String, String)> = axes
            .iter()
            .zip(combo)
            .map(|(a, &j)| (a.key.clone(), display(&a.values[j])))
            .collect();
        let label: String = settings
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("_")
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "=._-".contains(c) { c } else { '-' })
            .collect();
        let name = if label.is_empty() { format!("cell-{i:03}") } else { format!("cell-{i:03}-{label}") };
        let result = run_experiment(cfg)?;
        let summary = emit_results(&result, dir.join(&name))?;
        cells.push(SweepCell {
            name,
            settings,
            modes: summary
                .modes
                .iter()
                .map(|m| CellMode {
                    mode: m.mode,
                    qar: m.qar.mean,
                    sum_rate: m.sum_rate.mean,
                    ee: m.ee.mean,
                    power: m.power.mean,
                    delta_omega_rad: m.calibration.delta_omega_rad,
                })
                .collect(),
        });
    }
    let summary = SweepSummary {
        axes: axes.iter().map(|a| a.key.clone()).collect(),
        cells,
    };
    let path = dir.join(SWEEP_SUMMARY_FILE);
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(&summary).expect("sweep summary serializes");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}
