use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hapbeam::calibration::calibrate;
use hapbeam::forecast::{
    forecast_errors, load_external_forecasts, AttitudeSeries, Autoregressive, ForecastOutput, ForecastRequest,
    Forecaster, LinearTrend, Persistence,
};
use hapbeam::harness::{
    emit_results, generate_attitude_series, parse_axis, run_experiment, run_sweep, ScenarioConfig, SweepAxis,
    CALIBRATION_FILE,
};
use hapbeam::{Error, Result};

#[derive(Parser)]
#[command(name = "hapbeam", version, about = "Attitude-aware hybrid beamforming simulator for HAP downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the pointing radius and residual moments from telemetry.
    Calibrate(CalibrateArgs),
    /// Run one scenario and write snapshots.csv, summary.json, calibration.txt.
    Run(RunArgs),
    /// Run the cross product of `--axis key=v1,v2` overrides.
    Sweep(SweepArgs),
    /// Report forecast errors over every origin of a telemetry file.
    ForecastEval(EvalArgs),
    /// Write a synthetic attitude series as CSV.
    GenTelemetry(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Persistence,
    Linear,
    Ar,
}

#[derive(Args)]
struct ForecastSource {
    /// Attitude telemetry CSV (t, yaw_deg, pitch_deg, roll_deg).
    #[arg(long)]
    telemetry: PathBuf,
    /// Precomputed forecasts CSV; overrides --method.
    #[arg(long)]
    forecasts: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ar")]
    method: Method,
    #[arg(long, default_value_t = 8)]
    ar_order: usize,
    /// Look-back window L_win in samples.
    #[arg(long, default_value_t = 192)]
    window: usize,
    /// Decision delay d in slots.
    #[arg(long, default_value_t = 6)]
    delay: usize,
    /// Forecast horizon H_pred in slots.
    #[arg(long, default_value_t = 12)]
    horizon: usize,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    source: ForecastSource,
    /// Miscoverage level ρ.
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value = CALIBRATION_FILE)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snapshots: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// `key=v1,v2,…` with a dotted config key; repeatable.
    #[arg(long = "axis", value_parser = parse_axis_arg)]
    axes: Vec<SweepAxis>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    source: ForecastSource,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Take the attitude process and seed from this scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    length: usize,
    /// Sample period ΔT in seconds.
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_axis_arg(s: &str) -> std::result::Result<SweepAxis, String> {
    parse_axis(s).map_err(|e| e.to_string())
}

fn load_config(args: &RunArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(n) = args.snapshots {
        cfg.run.snapshots = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Telemetry plus one forecast per usable origin.
fn forecasts(src: &ForecastSource) -> Result<(AttitudeSeries, Vec<ForecastOutput>)> {
    if src.delay < 1 || src.delay >= src.horizon {
        return Err(Error::Config(format!(
            "--delay {} must satisfy 1 <= d < --horizon {}",
            src.delay, src.horizon
        )));
    }
    let truth = AttitudeSeries::read_csv(&src.telemetry)?;
    if let Some(path) = &src.forecasts {
        let outputs = load_external_forecasts(path)?.into_values().collect();
        return Ok((truth, outputs));
    }
    let forecaster: Box<dyn Forecaster> = match src.method {
        Method::Persistence => Box::new(Persistence),
        Method::Linear => Box::new(LinearTrend),
        Method::Ar => Box::new(Autoregressive { order: src.ar_order }),
    };
    let first = src.window.saturating_sub(1);
    let end = truth.len().saturating_sub(src.horizon);
    if end <= first {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot hold a {}-sample window plus {} horizons",
            truth.len(),
            src.window,
            src.horizon
        )));
    }
    let outputs = (first..end)
        .map(|o| forecaster.forecast(&ForecastRequest::new(o, src.window, src.horizon, src.delay), &truth))
        .collect::<Result<_>>()?;
    Ok((truth, outputs))
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate(a) => {
            let (truth, outputs) = forecasts(&a.source)?;
            let report = calibrate(&truth, &outputs, a.source.delay, a.source.horizon, a.rho)?;
            report.write(&a.out)?;
            println!(
                "delta_omega = {:.6e} rad ({:.4} deg) from {} windows -> {}",
                report.delta_omega,
                report.delta_omega.to_degrees(),
                report.n(),
                a.out.display()
            );
        }
        Command::Run(a) => {
            let cfg = load_config(&a)?;
            let result = run_experiment(&cfg)?;
            let summary = emit_results(&result, &a.out)?;
            for m in &summary.modes {
                println!(
                    "{:<9} QAR {:.4}  sum-rate {:.4}  EE {:.4}  feasible {:.4}  delta {:.3} deg",
                    m.mode.as_str(),
                    m.qar.mean,
                    m.sum_rate.mean,
                    m.ee.mean,
                    m.feasible_fraction,
                    m.calibration.delta_omega_rad.to_degrees()
                );
            }
            println!("wrote {}", a.out.display());
        }
        Command::Sweep(a) => {
            let cfg = load_config(&a.run)?;
            let summary = run_sweep(&cfg, &a.axes, &a.run.out)?;
            for cell in &summary.cells {
                let qar: Vec<String> = cell.modes.iter().map(|m| format!("{}={:.4}", m.mode, m.qar)).collect();
                println!("{}  QAR {}", cell.name, qar.join(" "));
            }
        }
        Command::ForecastEval(a) => {
            let (truth, outputs) = forecasts(&a.source)?;
            let report = forecast_errors(&truth, &outputs, a.source.delay, a.source.horizon)?;
            write_json(a.out.as_deref(), &report)?;
        }
        Command::GenTelemetry(a) => {
            let cfg = match &a.config {
                Some(path) => ScenarioConfig::load(path)?,
                None => ScenarioConfig::default(),
            };
            let seed = a.seed.unwrap_or(cfg.run.seed);
            let period = a.period.unwrap_or(cfg.horizon.sample_period);
            if !(period > 0.0 && period.is_finite()) {
                return Err(Error::Config(format!("--period must be positive, got {period}")));
            }
            let series = generate_attitude_series(&cfg.attitude.process, seed, a.length, period)?;
            series.write_csv(&a.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
