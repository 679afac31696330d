use std::fs;

use hapbeam::channel::RicianPreset;
use hapbeam::forecast::{forecast_ar, write_forecasts, ForecastRequest};
use hapbeam::harness::{
    emit_results, generate_attitude_series, read_snapshots, run_experiment, run_sweep, parse_axis, CompensationMode,
    ForecastMethod, RunSummary, ScenarioConfig, CALIBRATION_FILE, SNAPSHOTS_FILE, SUMMARY_FILE,
};
use hapbeam::calibration::CalibrationReport;
use hapbeam::array::analog_beamformer;
use hapbeam::geometry::WorldGeometry;
use hapbeam::harness::{place_users, scenario_attitude};
use hapbeam::rng::{streams, substream};
use hapbeam::Error;
use nalgebra::Vector3;

fn small(snapshots: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.array.mx = 8;
    cfg.array.my = 8;
    cfg.users.count = 4;
    cfg.horizon.window = 64;
    cfg.run.snapshots = snapshots;
    cfg
}

#[test]
fn identical_configs_give_identical_files() {
    let cfg = small(30);
    let dir = tempfile::tempdir().unwrap();
    emit_results(&run_experiment(&cfg).unwrap(), dir.path().join("a")).unwrap();
    emit_results(&run_experiment(&cfg).unwrap(), dir.path().join("b")).unwrap();
    for file in [SNAPSHOTS_FILE, CALIBRATION_FILE] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let mut other = cfg.clone();
    other.run.seed += 1;
    emit_results(&run_experiment(&other).unwrap(), dir.path().join("c")).unwrap();
    assert_ne!(
        fs::read(dir.path().join("a").join(SNAPSHOTS_FILE)).unwrap(),
        fs::read(dir.path().join("c").join(SNAPSHOTS_FILE)).unwrap()
    );
}

/// Largest |a_iᴴ a_j| between distinct ideal beams of snapshot `i`,
/// rebuilt from the public per-snapshot streams.
fn max_beam_overlap(cfg: &ScenarioConfig, i: usize) -> f64 {
    let (truth, timeline) = scenario_attitude(cfg).unwrap();
    let tau = timeline.snapshot_slot(i);
    let mut rng = substream(cfg.run.seed, streams::USERS, i as u64);
    let users = place_users(cfg.users.layout, cfg.users.count, cfg.users.radius, &mut rng);
    let geometry = WorldGeometry::new(Vector3::new(0.0, 0.0, cfg.hap.altitude), users).unwrap();
    let a = analog_beamformer(&cfg.array_config(), &geometry, truth.get(tau).unwrap(), tau, 0).unwrap().matrix;
    let gram = a.adjoint() * &a;
    let mut worst: f64 = 0.0;
    for r in 0..gram.nrows() {
        for c in 0..r {
            worst = worst.max(gram[(r, c)].norm());
        }
    }
    worst
}

#[test]
fn ideal_pure_los_with_generous_budget_admits_resolvable_users() {
    let mut cfg = small(40);
    cfg.channel.preset = RicianPreset::PureLos;
    cfg.compensation.modes = vec![CompensationMode::Ideal];
    cfg.qos.p_max = 1e3;
    cfg.qos.r_min = 4.0;
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.records.len(), 40);
    let mut resolvable = 0;
    for rec in &r.records {
        assert!(rec.feasible && rec.max_pointing_err_deg == 0.0);
        // Users whose beams barely overlap are each feasible on their own beam.
        if max_beam_overlap(&cfg, rec.snapshot) < 0.3 {
            resolvable += 1;
            assert_eq!(rec.qar, 1.0, "snapshot {}", rec.snapshot);
        }
    }
    assert!(resolvable >= 10, "only {resolvable} resolvable snapshots");
}

#[test]
fn outputs_round_trip_and_agree() {
    let cfg = small(20);
    let r = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = emit_results(&r, dir.path()).unwrap();

    let rows = read_snapshots(fs::File::open(dir.path().join(SNAPSHOTS_FILE)).unwrap()).unwrap();
    assert_eq!(rows, r.records);
    assert_eq!(rows.len(), 20 * CompensationMode::ALL.len());

    let json: RunSummary = serde_json::from_str(&fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(json.modes, summary.modes);
    assert!(!json.empty);
    for m in &json.modes {
        let per: Vec<&_> = rows.iter().filter(|x| x.mode == m.mode).collect();
        let mean = |f: &dyn Fn(&hapbeam::harness::SnapshotRecord) -> f64| per.iter().map(|x| f(x)).sum::<f64>() / per.len() as f64;
        assert!((m.qar.mean - mean(&|x| x.qar)).abs() <= 1e-12);
        assert!((m.sum_rate.mean - mean(&|x| x.sum_rate)).abs() <= 1e-12 * m.sum_rate.mean.abs().max(1.0));
        assert!((m.power.mean - mean(&|x| x.power)).abs() <= 1e-12 * m.power.mean.max(1.0));
        assert_eq!(m.feasible_fraction, 1.0);
    }
    let (report, n) = CalibrationReport::read(dir.path().join(CALIBRATION_FILE)).unwrap();
    let forecast = &r.calibrations[&CompensationMode::Forecast];
    assert_eq!(n, forecast.n());
    assert_eq!(report.delta_omega, forecast.delta_omega);
    assert_eq!(report.sigma_omega, forecast.sigma_omega);
}

#[test]
fn empty_run_is_flagged() {
    let r = run_experiment(&small(0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = emit_results(&r, dir.path()).unwrap();
    assert!(summary.empty);
    assert!(summary.modes.iter().all(|m| m.snapshots == 0 && m.qar.mean.is_nan()));
    let csv = fs::read_to_string(dir.path().join(SNAPSHOTS_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 1);
    // NaN aggregates are written as JSON null.
    assert!(fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap().contains("null"));
}

#[test]
fn ideal_calibrates_to_zero_and_never_loses_to_none() {
    let r = run_experiment(&small(40)).unwrap();
    assert_eq!(r.calibrations[&CompensationMode::Ideal].delta_omega, 0.0);
    let ideal = r.mode(CompensationMode::Ideal).unwrap();
    let none = r.mode(CompensationMode::None).unwrap();
    assert!(ideal.sum_rate.mean >= none.sum_rate.mean);
    assert!(ideal.calibration.coverage == 1.0);
    let f = r.mode(CompensationMode::Forecast).unwrap();
    assert!(f.calibration.coverage > 0.5 && f.calibration.coverage <= 1.0);
}

#[test]
fn telemetry_and_external_forecasts_from_disk() {
    let base = small(10);
    let dir = tempfile::tempdir().unwrap();
    let series = generate_attitude_series(&base.attitude.process, 3, 2000, 0.1).unwrap();
    let telemetry = dir.path().join("telemetry.csv");
    series.write_csv(&telemetry).unwrap();
    let h = &base.horizon;
    let outputs: Vec<_> = (h.window - 1..series.len() - h.horizon)
        .map(|o| forecast_ar(&ForecastRequest::new(o, h.window, h.horizon, h.delay), &series, 8).unwrap())
        .collect();
    let forecasts = dir.path().join("forecasts.csv");
    write_forecasts(&forecasts, &outputs).unwrap();

    let mut on_disk = base.clone();
    on_disk.attitude.telemetry = Some("telemetry.csv".into());
    on_disk.forecast.method = ForecastMethod::External;
    on_disk.forecast.path = Some("forecasts.csv".into());
    let text = on_disk.to_toml();
    let path = dir.path().join("scenario.toml");
    fs::write(&path, text).unwrap();
    let cfg = ScenarioConfig::load(&path).unwrap();
    assert_eq!(cfg.forecast.method, ForecastMethod::External);
    let external = run_experiment(&cfg).unwrap();

    let mut internal_cfg = cfg.clone();
    internal_cfg.forecast.method = ForecastMethod::Ar;
    let internal = run_experiment(&internal_cfg).unwrap();
    assert_eq!(external.records, internal.records);
    assert_eq!(external.timeline.length, 2000);

    let mut short = cfg.clone();
    short.run.snapshots = 5000;
    assert!(matches!(run_experiment(&short), Err(Error::InsufficientData(_))));
}

#[test]
fn sweep_writes_one_directory_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(8);
    cfg.compensation.modes = vec![CompensationMode::Ideal];
    let axes = vec![parse_axis("users.count=2,3").unwrap(), parse_axis("channel.preset=rician-weak,pure-los").unwrap()];
    let s = run_sweep(&cfg, &axes, dir.path()).unwrap();
    assert_eq!(s.cells.len(), 4);
    for cell in &s.cells {
        assert!(dir.path().join(&cell.name).join(SNAPSHOTS_FILE).exists());
    }
    assert_eq!(s.cells[3].settings, vec![("users.count".into(), "3".into()), ("channel.preset".into(), "pure-los".into())]);
    let bad = vec![parse_axis("users.count=0").unwrap()];
    assert!(matches!(run_sweep(&cfg, &bad, dir.path()), Err(Error::Config(_))));
}
