//! Scenario configuration, Monte Carlo runs and their on-disk outputs.

mod attitude;
mod config;
mod experiment;
mod output;
mod sweep;
mod users;

pub use attitude::{generate_attitude_series, AttitudeProcess, Sinusoid};
pub use config::{
    ArraySection, AttitudeSection, CalibrationSection, ChannelSection, CompensationMode, CompensationSection,
    ForecastMethod, ForecastSection, HapSection, HorizonSection, QosSection, RunSection, ScenarioConfig, UsersSection,
};
pub use experiment::{
    compensation_attitude, run_experiment, scenario_attitude, DiagnosticTotals, ModeCalibration, ModeSummary, RunResult, SnapshotDetail,
    SnapshotRecord, Stat, Timeline, SPLIT,
};
pub use output::{emit_results, read_snapshots, write_snapshots, RunSummary, CALIBRATION_FILE, SNAPSHOTS_FILE, SUMMARY_FILE};
pub use sweep::{apply_override, parse_axis, run_sweep, CellMode, SweepAxis, SweepCell, SweepSummary, SWEEP_SUMMARY_FILE};
pub use users::{place_users, UserLayout};
