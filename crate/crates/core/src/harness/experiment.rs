//! Monte Carlo evaluation of the compensation modes on one scenario.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attitude::generate_attitude_series;
use super::config::{CompensationMode, ForecastMethod, ScenarioConfig};
use super::users::place_users;
use crate::array::{build_analog_sequence, latest_covering_origin, select_applied_beamformer, DetuningModel, PointingCertificate};
use crate::calibration::{calibrate, collect_windows, coverage_check, CalibrationReport};
use crate::channel::{effective_channel, synthesize_channel, ChannelParams};
use crate::error::{Error, Result};
use crate::forecast::{
    forecast_errors, load_external_forecasts, nearest_rank, AttitudeSeries, Autoregressive, ForecastErrorReport,
    ForecastOutput, ForecastRequest, Forecaster, LinearTrend, Persistence, Replay,
};
use crate::geometry::{euler_to_rotation, rotation_log_vee, EulerZYX, WorldGeometry};
use crate::rng::{streams, substream, substream_seed};
use crate::solver::{solve_snapshot, SnapshotProblem, SolverDiagnostics};

/// Train / validation / test fractions of the attitude series.
pub const SPLIT: [f64; 3] = [0.7, 0.1, 0.2];
/// Fewest calibration windows the validation split must provide.
const MIN_CALIBRATION_WINDOWS: usize = 20;

/// Slot bookkeeping for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub length: usize,
    /// First validation slot.
    pub train_end: usize,
    /// First test slot.
    pub val_end: usize,
    pub delay: usize,
    pub horizon: usize,
    pub window: usize,
    pub snapshots: usize,
}

impl Timeline {
    pub fn new(length: usize, delay: usize, horizon: usize, window: usize, snapshots: usize) -> Self {
        Self {
            length,
            train_end: (SPLIT[0] * length as f64).floor() as usize,
            val_end: ((SPLIT[0] + SPLIT[1]) * length as f64).floor() as usize,
            delay,
            horizon,
            window,
            snapshots,
        }
    }

    /// Shortest series that satisfies [`Timeline::check`].
    pub fn minimal(delay: usize, horizon: usize, window: usize, snapshots: usize) -> Self {
        let test_need = snapshots.max(1) + horizon.max(delay + 1);
        let mut length = ((test_need as f64 / SPLIT[2]).ceil() as usize).max(2);
        loop {
            let t = Self::new(length, delay, horizon, window, snapshots);
            if t.check().is_ok() {
                return t;
            }
            length += 1 + length / 100;
        }
    }

    pub fn check(&self) -> Result<()> {
        let cal = self.calibration_origins();
        if cal.len() < MIN_CALIBRATION_WINDOWS {
            return Err(Error::InsufficientData(format!(
                "validation split yields {} calibration windows, at least {MIN_CALIBRATION_WINDOWS} needed",
                cal.len()
            )));
        }
        if self.snapshots > 0 && self.val_end + self.snapshots - 1 + self.horizon >= self.length {
            return Err(Error::InsufficientData(format!(
                "test split of {} slots cannot host {} snapshots",
                self.length - self.val_end,
                self.snapshots
            )));
        }
        Ok(())
    }

    /// Validation origins whose whole target window lies in the validation split.
    pub fn calibration_origins(&self) -> std::ops::Range<usize> {
        let lo = (self.train_end.saturating_sub(self.delay + 1)).max(self.window.saturating_sub(1));
        let hi = self.val_end.saturating_sub(self.horizon);
        lo..hi.max(lo)
    }

    /// Test origins whose whole horizon lies inside the series.
    pub fn test_origins(&self) -> std::ops::Range<usize> {
        let hi = self.length.saturating_sub(self.horizon);
        self.val_end..hi.max(self.val_end)
    }

    /// Target slot τ of snapshot `i`.
    pub fn snapshot_slot(&self, i: usize) -> usize {
        self.val_end + self.delay + 1 + i
    }
}

/// One row of `snapshots.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub snapshot: usize,
    pub mode: CompensationMode,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "QAR")]
    pub qar: f64,
    pub sum_rate: f64,
    pub ee: f64,
    pub power: f64,
    pub feasible: bool,
    pub max_pointing_err_deg: f64,
}

/// Per-snapshot values that are not part of the CSV.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SnapshotDetail {
    pub slot: usize,
    pub certified: usize,
    pub solve_time_ms: f64,
    pub diagnostics: SolverDiagnostics,
}

/// Mean and tail percentiles of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub p95: f64,
    pub p99: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                p95: f64::NAN,
                p99: f64::NAN,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            p95: nearest_rank(&sorted, 0.95),
            p99: nearest_rank(&sorted, 0.99),
        }
    }
}

/// Calibration outcome for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCalibration {
    pub delta_omega_rad: f64,
    pub windows: usize,
    pub mu_omega: [f64; 3],
    pub sigma_omega: [f64; 9],
    /// Held-out coverage of δ_ω over test windows at stride 1.
    pub coverage: f64,
    /// Same at stride H_pred (non-overlapping windows).
    pub coverage_stride_horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: CompensationMode,
    pub snapshots: usize,
    pub qar: Stat,
    pub sum_rate: Stat,
    pub ee: Stat,
    pub power: Stat,
    pub feasible_fraction: f64,
    pub certified_fraction: f64,
    pub pointing_err_deg: Stat,
    pub solve_time_ms: Stat,
    pub calibration: ModeCalibration,
}

/// Solver counters summed (or maxed) over the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiagnosticTotals {
    pub solves: usize,
    pub max_bisection_steps: usize,
    pub max_drops: usize,
    pub max_refine_iterations: usize,
    pub nu_monotonicity_violations: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub timeline: Timeline,
    pub records: Vec<SnapshotRecord>,
    pub details: Vec<SnapshotDetail>,
    pub modes: Vec<ModeSummary>,
    pub calibrations: BTreeMap<CompensationMode, CalibrationReport>,
    pub forecast_errors: Option<ForecastErrorReport>,
    pub diagnostics: DiagnosticTotals,
    pub wall_time_s: f64,
}

impl RunResult {
    /// Report written to `calibration.txt`: the forecast mode's when it
    /// ran, otherwise the first mode's.
    pub fn primary_calibration(&self) -> Option<&CalibrationReport> {
        self.calibrations
            .get(&CompensationMode::Forecast)
            .or_else(|| self.config.compensation.modes.first().and_then(|m| self.calibrations.get(m)))
    }

    pub fn mode(&self, mode: CompensationMode) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    /// Per-snapshot values of `metric` for one mode, in snapshot order.
    pub fn column(&self, mode: CompensationMode, metric: impl Fn(&SnapshotRecord) -> f64) -> Vec<f64> {
        self.records.iter().filter(|r| r.mode == mode).map(metric).collect()
    }
}

/// The attitude source a compensation mode steers with.
struct ModeSource<'a> {
    mode: CompensationMode,
    nominal: EulerZYX,
    forecaster: &'a dyn Forecaster,
}

impl ModeSource<'_> {
    fn forecast(&self, truth: &AttitudeSeries, req: &ForecastRequest) -> Result<ForecastOutput> {
        let horizons = match self.mode {
            CompensationMode::None => vec![self.nominal; req.horizon],
            CompensationMode::Reactive => return Persistence.forecast(req, truth),
            CompensationMode::Forecast => return self.forecaster.forecast(req, truth),
            CompensationMode::Ideal => (1..=req.horizon)
                .map(|h| {
                    truth
                        .get(req.origin + h)
                        .ok_or_else(|| Error::Range(format!("truth ends before slot {}", req.origin + h)))
                })
                .collect::<Result<_>>()?,
        };
        Ok(ForecastOutput {
            origin: req.origin,
            horizons,
            tag: self.mode.to_string(),
            fallback: false,
        })
    }
}

/// Attitude a mode steers the slot-`tau` beam with.
///
/// `forecast` must be the output issued at origin `tau − delay − 1`; only
/// the forecast mode reads it.
pub fn compensation_attitude(
    mode: CompensationMode,
    nominal: EulerZYX,
    truth: &AttitudeSeries,
    forecast: Option<&ForecastOutput>,
    tau: usize,
    delay: usize,
) -> Result<EulerZYX> {
    let truth_at = |slot: usize| truth.get(slot).ok_or_else(|| Error::Range(format!("truth ends before slot {slot}")));
    match mode {
        CompensationMode::None => Ok(nominal),
        CompensationMode::Reactive => truth_at(tau.checked_sub(delay + 1).ok_or(Error::UncoveredSlot(tau))?),
        CompensationMode::Ideal => truth_at(tau),
        CompensationMode::Forecast => {
            let f = forecast.ok_or_else(|| Error::InvalidArgument("forecast mode needs a forecast".into()))?;
            if latest_covering_origin(tau, delay, 0) != Some(f.origin) {
                return Err(Error::InvalidArgument(format!(
                    "forecast from origin {} does not cover slot {tau} under delay {delay}",
                    f.origin
                )));
            }
            f.at(tau - f.origin).ok_or(Error::UncoveredSlot(tau))
        }
    }
}

fn build_forecaster(cfg: &ScenarioConfig) -> Result<Box<dyn Forecaster>> {
    Ok(match cfg.forecast.method {
        ForecastMethod::Persistence => Box::new(Persistence),
        ForecastMethod::Linear => Box::new(LinearTrend),
        ForecastMethod::Ar => Box::new(Autoregressive {
            order: cfg.forecast.ar_order,
        }),
        ForecastMethod::External => {
            let path = cfg
                .forecast
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("external forecaster needs forecast.path".into()))?;
            Box::new(Replay {
                outputs: load_external_forecasts(path)?,
            })
        }
    })
}

/// Telemetry for the run: the configured CSV or the synthetic process.
pub fn scenario_attitude(cfg: &ScenarioConfig) -> Result<(AttitudeSeries, Timeline)> {
    let h = &cfg.horizon;
    match &cfg.attitude.telemetry {
        Some(path) => {
            let series = AttitudeSeries::read_csv(path)?;
            if (series.period() - h.sample_period).abs() > 1e-6 * h.sample_period {
                return Err(Error::Config(format!(
                    "telemetry period {} s differs from horizon.sample_period {} s",
                    series.period(),
                    h.sample_period
                )));
            }
            let timeline = Timeline::new(series.len(), h.delay, h.horizon, h.window, cfg.run.snapshots);
            timeline.check()?;
            Ok((series, timeline))
        }
        None => {
            let timeline = Timeline::minimal(h.delay, h.horizon, h.window, cfg.run.snapshots);
            let series = generate_attitude_series(&cfg.attitude.process, cfg.run.seed, timeline.length, h.sample_period)?;
            Ok((series, timeline))
        }
    }
}

fn forecasts_for(
    source: &ModeSource<'_>,
    truth: &AttitudeSeries,
    origins: std::ops::Range<usize>,
    t: &Timeline,
) -> Result<Vec<ForecastOutput>> {
    origins
        .into_par_iter()
        .map(|o| source.forecast(truth, &ForecastRequest::new(o, t.window, t.horizon, t.delay)))
        .collect()
}

fn pointing_error(estimate: EulerZYX, truth: EulerZYX) -> Result<f64> {
    Ok(rotation_log_vee(&euler_to_rotation(estimate)?, &euler_to_rotation(truth)?)?.angle())
}

struct PreparedMode<'a> {
    source: ModeSource<'a>,
    calibration: CalibrationReport,
    summary_calibration: ModeCalibration,
    /// Test-origin forecasts keyed by origin slot.
    forecasts: BTreeMap<usize, ForecastOutput>,
}

/// Runs every configured compensation mode on the same snapshots.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<RunResult> {
    cfg.validate()?;
    let started = Instant::now();
    let (truth, timeline) = scenario_attitude(cfg)?;
    let forecaster = build_forecaster(cfg)?;
    let array = cfg.array_config();
    let nominal = {
        let [y, p, r] = cfg.compensation.nominal_deg;
        EulerZYX::from_degrees(y, p, r)
    };
    let t = timeline;
    let cal_origins = t.calibration_origins();
    let test_origins = t.test_origins();
    // Split hygiene: calibration windows end before any test origin.
    if cal_origins.end + t.horizon > t.val_end || test_origins.start < t.val_end {
        return Err(Error::Invariant("calibration and test windows overlap".into()));
    }

    let mut prepared = Vec::new();
    for &mode in &cfg.compensation.modes {
        let source = ModeSource {
            mode,
            nominal,
            forecaster: forecaster.as_ref(),
        };
        let cal_outputs = forecasts_for(&source, &truth, cal_origins.clone(), &t)?;
        let calibration = calibrate(&truth, &cal_outputs, t.delay, t.horizon, cfg.calibration.rho)?;
        let test_outputs = forecasts_for(&source, &truth, test_origins.clone(), &t)?;
        let (z_test, _) = collect_windows(&truth, &test_outputs, t.delay, t.horizon)?;
        let strided: Vec<f64> = z_test.iter().step_by(t.horizon).copied().collect();
        let s = &calibration.sigma_omega;
        let summary_calibration = ModeCalibration {
            delta_omega_rad: calibration.delta_omega,
            windows: calibration.n(),
            mu_omega: [calibration.mu_omega.x, calibration.mu_omega.y, calibration.mu_omega.z],
            sigma_omega: std::array::from_fn(|i| s[(i / 3, i % 3)]),
            coverage: coverage_check(&z_test, calibration.delta_omega),
            coverage_stride_horizon: coverage_check(&strided, calibration.delta_omega),
        };
        prepared.push(PreparedMode {
            source,
            calibration,
            summary_calibration,
            forecasts: test_outputs.into_iter().map(|o| (o.origin, o)).collect(),
        });
    }

    let forecast_report = match prepared.iter().find(|p| p.source.mode == CompensationMode::Forecast) {
        Some(p) if !p.forecasts.is_empty() => Some(forecast_errors(&truth, p.forecasts.values(), t.delay, t.horizon)?),
        _ => None,
    };

    let per_snapshot: Vec<Vec<(SnapshotRecord, SnapshotDetail)>> = (0..t.snapshots)
        .into_par_iter()
        .map(|i| {
            run_snapshot(cfg, &array, &truth, &t, &prepared, i).map_err(|e| Error::Snapshot {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let (records, details): (Vec<_>, Vec<_>) = per_snapshot.into_iter().flatten().unzip();

    let modes = prepared
        .iter()
        .map(|p| summarize(p.source.mode, &records, &details, cfg.users.count, p.summary_calibration.clone()))
        .collect();
    let diagnostics = details.iter().fold(DiagnosticTotals::default(), |mut acc, d| {
        acc.solves += 1;
        acc.max_bisection_steps = acc.max_bisection_steps.max(d.diagnostics.max_bisection_steps);
        acc.max_drops = acc.max_drops.max(d.diagnostics.drops);
        acc.max_refine_iterations = acc.max_refine_iterations.max(d.diagnostics.refine_iterations);
        acc.nu_monotonicity_violations += d.diagnostics.nu_monotonicity_violations;
        acc
    });
    Ok(RunResult {
        config: cfg.clone(),
        timeline: t,
        records,
        details,
        modes,
        calibrations: prepared.into_iter().map(|p| (p.source.mode, p.calibration)).collect(),
        forecast_errors: forecast_report,
        diagnostics,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

fn run_snapshot(
    cfg: &ScenarioConfig,
    array: &crate::array::ArrayConfig,
    truth: &AttitudeSeries,
    t: &Timeline,
    prepared: &[PreparedMode<'_>],
    i: usize,
) -> Result<Vec<(SnapshotRecord, SnapshotDetail)>> {
    let seed = cfg.run.seed;
    let tau = t.snapshot_slot(i);
    let origin = latest_covering_origin(tau, t.delay, t.val_end).ok_or(Error::UncoveredSlot(tau))?;
    let true_attitude = truth.get(tau).ok_or_else(|| Error::Range(format!("truth ends before slot {tau}")))?;

    let mut rng = substream(seed, streams::USERS, i as u64);
    let users = place_users(cfg.users.layout, cfg.users.count, cfg.users.radius, &mut rng)
        .into_iter()
        .map(|p| p + Vector3::new(cfg.hap.x, cfg.hap.y, 0.0))
        .collect();
    let geometry = WorldGeometry::new(Vector3::new(cfg.hap.x, cfg.hap.y, cfg.hap.altitude), users)?;
    let nominal = prepared.first().map_or(EulerZYX::LEVEL, |p| p.source.nominal);
    let certificate = PointingCertificate::build(
        array,
        &geometry,
        nominal,
        cfg.calibration.box_half_width_deg.to_radians(),
        cfg.calibration.grid,
        cfg.calibration.epsilon,
        cfg.calibration.rho,
        cfg.calibration.rho_s,
    )?;
    let kappa = cfg.channel.preset.kappa();
    let params = ChannelParams {
        kappa: vec![kappa; cfg.users.count],
        beta: cfg.channel.large_scale.gains(array.wavelength, &geometry),
        noise_power: cfg.qos.noise_power,
        bandwidth: cfg.qos.bandwidth,
    };
    let channel = synthesize_channel(array, &geometry, true_attitude, &params, substream_seed(seed, streams::CHANNEL, i as u64), tau)?;
    let solver_cfg = crate::solver::SolverConfig {
        priority_seed: substream_seed(seed, streams::PRIORITY, i as u64),
        ..cfg.admission.clone()
    };

    let mut out = Vec::with_capacity(prepared.len());
    for p in prepared {
        let forecast = p
            .forecasts
            .get(&origin)
            .ok_or_else(|| Error::Range(format!("no forecast at origin {origin}")))?;
        let schedule = build_analog_sequence(array, &geometry, &forecast.horizons, origin, t.delay, t.horizon)?;
        let beam = select_applied_beamformer(&schedule, tau)?;
        let applied = forecast.at(tau - origin).ok_or(Error::UncoveredSlot(tau))?;
        let h_eff = effective_channel(&channel.h, &beam.matrix)?;
        let certified = if cfg.calibration.enforce {
            certificate.certified(p.calibration.delta_omega)
        } else {
            vec![true; cfg.users.count]
        };
        let sigma_xi = DetuningModel::at_angles(array, &beam.angles).variance_proxies(&p.calibration.sigma_omega);
        let problem = SnapshotProblem::new(
            h_eff,
            &beam.matrix,
            vec![cfg.qos.r_min; cfg.users.count],
            cfg.qos.p_max,
            cfg.qos.noise_power,
            cfg.qos.bandwidth,
            cfg.qos.circuit_power,
        )?
        .with_certified(certified.clone())?
        .with_uncertainty(sigma_xi)?;
        let clock = Instant::now();
        let outcome = solve_snapshot(&problem, &solver_cfg)?;
        let solve_time_ms = clock.elapsed().as_secs_f64() * 1e3;
        let s = &outcome.solution;
        out.push((
            SnapshotRecord {
                snapshot: i,
                mode: p.source.mode,
                k: cfg.users.count,
                qar: s.qar,
                sum_rate: s.sum_rate,
                ee: s.ee,
                power: s.power,
                feasible: s.feasible,
                max_pointing_err_deg: pointing_error(applied, true_attitude)?.to_degrees(),
            },
            SnapshotDetail {
                slot: tau,
                certified: certified.iter().filter(|c| **c).count(),
                solve_time_ms,
                diagnostics: outcome.diagnostics,
            },
        ));
    }
    Ok(out)
}

fn summarize(
    mode: CompensationMode,
    records: &[SnapshotRecord],
    details: &[SnapshotDetail],
    k: usize,
    calibration: ModeCalibration,
) -> ModeSummary {
    let rows: Vec<(&SnapshotRecord, &SnapshotDetail)> =
        records.iter().zip(details).filter(|(r, _)| r.mode == mode).collect();
    let col = |f: &dyn Fn(&SnapshotRecord, &SnapshotDetail) -> f64| -> Vec<f64> { rows.iter().map(|(r, d)| f(r, d)).collect() };
    let n = rows.len();
    let fraction = |v: Vec<f64>| if n == 0 { f64::NAN } else { v.iter().sum::<f64>() / n as f64 };
    ModeSummary {
        mode,
        snapshots: n,
        qar: Stat::of(&col(&|r, _| r.qar)),
        sum_rate: Stat::of(&col(&|r, _| r.sum_rate)),
        ee: Stat::of(&col(&|r, _| r.ee)),
        power: Stat::of(&col(&|r, _| r.power)),
        feasible_fraction: fraction(col(&|r, _| f64::from(u8::from(r.feasible)))),
        certified_fraction: fraction(col(&|_, d| d.certified as f64 / k as f64)),
        pointing_err_deg: Stat::of(&col(&|r, _| r.max_pointing_err_deg)),
        solve_time_ms: Stat::of(&col(&|_, d| d.solve_time_ms)),
        calibration,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EulerZYX;

    #[test]
    fn timeline_splits_are_disjoint() {
        let t = Timeline::minimal(6, 12, 192, 200);
        t.check().unwrap();
        assert_eq!(t.train_end, (0.7 * t.length as f64).floor() as usize);
        let cal = t.calibration_origins();
        // Calibration targets stay inside the validation split.
        assert!(cal.start + 6 + 1 >= t.train_end);
        assert!(cal.end - 1 + 12 < t.val_end);
        assert!(cal.start + 1 >= 192);
        assert_eq!(t.test_origins().start, t.val_end);
        assert!(t.val_end + 199 + 12 < t.length);
        assert!(matches!(Timeline::new(250, 6, 12, 192, 10).check(), Err(Error::InsufficientData(_))));
    }

    fn ramp(n: usize, slope_deg: f64) -> AttitudeSeries {
        let samples = (0..n)
            .map(|i| EulerZYX::from_degrees(slope_deg * i as f64, 0.5 * slope_deg * i as f64, -slope_deg * i as f64))
            .collect();
        AttitudeSeries::new(0.1, samples).unwrap()
    }

    #[test]
    fn modes_on_constant_truth_coincide() {
        let c = EulerZYX::from_degrees(10.0, 1.0, -2.0);
        let truth = AttitudeSeries::new(0.1, vec![c; 64]).unwrap();
        let (d, h) = (3, 6);
        let tau = 40;
        let f = Persistence
            .forecast(&ForecastRequest::new(tau - d - 1, 16, h, d), &truth)
            .unwrap();
        for mode in CompensationMode::ALL {
            let a = compensation_attitude(mode, c, &truth, Some(&f), tau, d).unwrap();
            assert_eq!(a, c, "{mode}");
        }
    }

    #[test]
    fn reactive_lags_a_ramp_by_delay_plus_one() {
        let slope = 0.01;
        let truth = ramp(100, slope);
        let (d, tau) = (6, 80);
        let r = compensation_attitude(CompensationMode::Reactive, EulerZYX::LEVEL, &truth, None, tau, d).unwrap();
        let t = truth.get(tau).unwrap();
        let lag = slope * (d + 1) as f64;
        let err = [t.yaw - r.yaw, t.pitch - r.pitch, t.roll - r.roll].map(|e| e.to_degrees());
        for (e, s) in err.iter().zip([1.0, 0.5, -1.0]) {
            assert!((e - s * lag).abs() < 1e-9, "{err:?}");
        }
        let ideal = compensation_attitude(CompensationMode::Ideal, EulerZYX::LEVEL, &truth, None, tau, d).unwrap();
        assert_eq!(pointing_error(ideal, t).unwrap(), 0.0);
    }

    #[test]
    fn forecast_mode_checks_the_origin() {
        let truth = ramp(100, 0.01);
        let f = LinearTrend.forecast(&ForecastRequest::new(50, 32, 12, 6), &truth).unwrap();
        let a = compensation_attitude(CompensationMode::Forecast, EulerZYX::LEVEL, &truth, Some(&f), 57, 6).unwrap();
        assert_eq!(a, f.at(7).unwrap());
        assert!(compensation_attitude(CompensationMode::Forecast, EulerZYX::LEVEL, &truth, Some(&f), 58, 6).is_err());
        assert!(compensation_attitude(CompensationMode::Forecast, EulerZYX::LEVEL, &truth, None, 57, 6).is_err());
    }

    #[test]
    fn stat_uses_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = Stat::of(&v);
        assert_eq!((s.mean, s.p95, s.p99), (50.5, 95.0, 99.0));
        assert!(Stat::of(&[]).mean.is_nan());
    }
}
