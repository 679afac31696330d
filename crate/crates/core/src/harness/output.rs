//! `snapshots.csv`, `summary.json` and `calibration.txt`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{DiagnosticTotals, ModeSummary, RunResult, SnapshotRecord, Timeline};
use crate::error::{Error, Result};
use crate::forecast::ForecastErrorReport;

pub const SNAPSHOTS_FILE: &str = "snapshots.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CALIBRATION_FILE: &str = "calibration.txt";

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// True when no snapshot was evaluated.
    pub empty: bool,
    pub seed: u64,
    pub snapshots: usize,
    pub users: usize,
    pub timeline: Timeline,
    pub modes: Vec<ModeSummary>,
    pub forecast_errors: Option<ForecastErrorReport>,
    pub diagnostics: DiagnosticTotals,
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn from_result(r: &RunResult) -> Self {
        Self {
            empty: r.records.is_empty(),
            seed: r.config.run.seed,
            snapshots: r.timeline.snapshots,
            users: r.config.users.count,
            timeline: r.timeline,
            modes: r.modes.clone(),
            forecast_errors: r.forecast_errors.clone(),
            diagnostics: r.diagnostics,
            wall_time_s: r.wall_time_s,
        }
    }
}

pub fn write_snapshots(w: impl Write, records: &[SnapshotRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    if records.is_empty() {
        csv.write_record([
            "snapshot",
            "mode",
            "K",
            "QAR",
            "sum_rate",
            "ee",
            "power",
            "feasible",
            "max_pointing_err_deg",
        ])
        .map_err(csv_error)?;
    }
    for r in records {
        csv.serialize(r).map_err(csv_error)?;
    }
    csv.flush().map_err(|e| Error::io(SNAPSHOTS_FILE, e))
}

pub fn read_snapshots(r: impl Read) -> Result<Vec<SnapshotRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .enumerate()
        .map(|(row, rec)| rec.map_err(|e| Error::parse(row + 2, "record", e.to_string())))
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io {
        path: SNAPSHOTS_FILE.into(),
        source: std::io::Error::other(e),
    }
}

/// Writes the three run artifacts into `dir`, creating it if needed.
pub fn emit_results(result: &RunResult, dir: impl AsRef<Path>) -> Result<RunSummary> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join(SNAPSHOTS_FILE);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_snapshots(BufWriter::new(file), &result.records)?;

    let summary = RunSummary::from_result(result);
    let path = dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;

    if let Some(report) = result.primary_calibration() {
        report.write(dir.join(CALIBRATION_FILE))?;
    }
    Ok(summary)
}
