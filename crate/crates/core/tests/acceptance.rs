//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use common::{random_snapshot, Shape};
use hapbeam::array::{analog_beamformer, gain_loss_quadratic, pointing_quadratic, spectral_bound, AngleBox, ArrayConfig};
use hapbeam::calibration::{calibrate_radius, coverage_check};
use hapbeam::forecast::{forecast_errors, forecast_linear_trend, AttitudeSeries, ForecastOutput, ForecastRequest};
use hapbeam::geometry::{euler_to_rotation, rotation_log_vee, rotation_to_euler, wrap_pi, EulerZYX, Rotation, SteeringAngles, WorldGeometry};
use hapbeam::harness::{emit_results, run_experiment, CompensationMode, ScenarioConfig, SNAPSHOTS_FILE};
use hapbeam::solver::{
    add_back, check_solution, exhaustive_best_admission, predict_admission_and_scalars, refine_qos_safe,
    required_power_proxies, solve_snapshot, strict_repair, AdmissionVector, SolverConfig, SolverDiagnostics,
};
use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {:.2} s, limit {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()))
    }
}

/// Rodrigues' formula, independent of the library's exponential map.
fn rodrigues(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    if theta == 0.0 {
        return Matrix3::identity();
    }
    let k = w / theta;
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * theta.sin() + kx * kx * (1.0 - theta.cos())
}

fn rotation_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut euler_err, mut log_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..10_000 {
        let a = EulerZYX::new(
            rng.random_range(-PI..PI),
            rng.random_range(-1.5..1.5),
            rng.random_range(-PI..PI),
        );
        let back = rotation_to_euler(&euler_to_rotation(a).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for (x, y) in [(a.yaw, back.yaw), (a.pitch, back.pitch), (a.roll, back.roll)] {
            euler_err = euler_err.max(wrap_pi(x - y).abs());
        }

        let r_hat = euler_to_rotation(EulerZYX::new(
            rng.random_range(-PI..PI),
            rng.random_range(-1.5..1.5),
            rng.random_range(-PI..PI),
        ))
        .map_err(|e| e.to_string())?;
        let axis = Vector3::<f64>::from_fn(|_, _| StandardNormal.sample(&mut rng)).normalize();
        let omega = axis * rng.random_range(0.0..PI - 0.05);
        let r = Rotation::from_matrix(r_hat.matrix() * rodrigues(&omega), 1e-9).map_err(|e| e.to_string())?;
        let got = rotation_log_vee(&r_hat, &r).map_err(|e| e.to_string())?;
        log_err = log_err.max((got.vector() - omega).norm());
    }
    within(Duration::from_secs(1), start.elapsed())?;
    check(
        euler_err <= 1e-8 && log_err <= 1e-8,
        format!("10^4 trials: euler round-trip {euler_err:.1e}, log-vee {log_err:.1e} rad"),
    )
}

fn random_geometry(rng: &mut ChaCha8Rng, k: usize) -> WorldGeometry {
    let users = (0..k)
        .map(|_| {
            let r = 20_000.0 * rng.random::<f64>().sqrt();
            let phi = TAU * rng.random::<f64>();
            Vector3::new(r * phi.cos(), r * phi.sin(), 0.0)
        })
        .collect();
    WorldGeometry::new(Vector3::new(0.0, 0.0, 20_000.0), users).unwrap()
}

fn constant_modulus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (mx, my) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let k = rng.random_range(1..=8);
        let cfg = ArrayConfig::half_wavelength(mx, my, 0.01, k);
        let geometry = random_geometry(&mut rng, k);
        let att = EulerZYX::from_degrees(rng.random_range(-180.0..180.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let a = analog_beamformer(&cfg, &geometry, att, 0, 0).map_err(|e| e.to_string())?;
        let m = (mx * my) as f64;
        for z in a.matrix.iter() {
            worst = worst.max((z.norm_sqr() - 1.0 / m).abs());
        }
    }
    check(worst <= 1e-15, format!("10^3 scenarios: max ||a|^2 - 1/M| = {worst:.1e}"))
}

/// `1 − |AF|²` summed element by element from the phase progression.
fn element_sum_loss(mx: usize, my: usize, xi: Vector2<f64>) -> f64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for n in 0..my {
        for m in 0..mx {
            let phase = TAU * (m as f64 * xi.x + n as f64 * xi.y);
            re += phase.cos();
            im += phase.sin();
        }
    }
    let m = (mx * my) as f64;
    1.0 - (re * re + im * im) / (m * m)
}

fn quadratic_loss() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for size in [8, 12] {
        let cfg = ArrayConfig::half_wavelength(size, size, 0.01, 1);
        let bound = 0.1 / size as f64;
        for _ in 0..10_000 {
            let xi = Vector2::new(rng.random_range(-bound..=bound), rng.random_range(-bound..=bound));
            let exact = element_sum_loss(size, size, xi);
            let model = gain_loss_quadratic(&cfg, &xi);
            worst = worst.max((model - exact).abs() / exact.max(1e-12));
        }
    }
    check(worst <= 0.05, format!("8x8 and 12x12, 2x10^4 detunings: max relative error {:.2}%", 100.0 * worst))
}

fn certificate_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = ArrayConfig::half_wavelength(12, 12, 0.01, 1);
    let mut violations = 0;
    let mut tightest: f64 = 0.0;
    for _ in 0..100 {
        let center = SteeringAngles::new(rng.random_range(0.1..1.0), rng.random_range(-PI..PI));
        let region = AngleBox::around(center, 3f64.to_radians());
        let l_sq = spectral_bound(&cfg, &region, 33).map_err(|e| e.to_string())?;
        let grid = region.grid(33);
        let delta = rng.random_range(0.001..0.05);
        for _ in 0..100 {
            let a = grid[rng.random_range(0..grid.len())];
            let dir = Vector3::<f64>::from_fn(|_, _| StandardNormal.sample(&mut rng)).normalize();
            let dw = dir * delta * rng.random::<f64>().cbrt();
            let q = pointing_quadratic(&cfg, a);
            let lhs = (dw.transpose() * q * dw)[(0, 0)];
            let rhs = l_sq * delta * delta;
            tightest = tightest.max(lhs / rhs);
            if lhs > rhs * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    check(violations == 0, format!("10^4 samples: {violations} violations, max lhs/rhs {tightest:.3}"))
}

fn conformal_coverage() -> Outcome {
    const TRIALS: usize = 50;
    const RHOS: [f64; 4] = [0.2, 0.1, 0.05, 0.01];
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| Vector3::<f64>::from_fn(|_, _| StandardNormal.sample(&mut rng)).norm())
            .collect()
    };
    // Marginal coverage: average over independent calibration/test pairs.
    let mut mean = [0.0; 4];
    let mut lowest = [1.0f64; 4];
    for _ in 0..TRIALS {
        let (cal, test) = (draw(2000), draw(2000));
        for (j, rho) in RHOS.iter().enumerate() {
            let c = coverage_check(&test, calibrate_radius(&cal, *rho).map_err(|e| e.to_string())?);
            mean[j] += c / TRIALS as f64;
            lowest[j] = lowest[j].min(c);
        }
    }
    let monotone = mean.windows(2).all(|w| w[0] <= w[1]);
    within(Duration::from_secs(10), start.elapsed())?;
    check(
        (0.88..=0.93).contains(&mean[1]) && (0.77..=0.83).contains(&mean[0]) && monotone,
        format!(
            "{TRIALS} pairs of n=2000, rho 0.2/0.1/0.05/0.01: mean {mean:.4?}, worst single pair {lowest:.4?}"
        ),
    )
}

struct FuzzStats {
    snapshots: usize,
    infeasible: usize,
    nu_violations: usize,
    refine_regressions: usize,
    elapsed: Duration,
}

fn fuzz_corpus() -> FuzzStats {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let shape = Shape { k_max: 12, array: 8 };
    let mut stats = FuzzStats {
        snapshots: 10_000,
        infeasible: 0,
        nu_violations: 0,
        refine_regressions: 0,
        elapsed: Duration::ZERO,
    };
    for seed in 0..stats.snapshots as u64 {
        let p = random_snapshot(100_000 + seed, &shape);
        match solve_snapshot(&p, &cfg) {
            Ok(out) => {
                if check_solution(&p, &out.solution).is_err() {
                    stats.infeasible += 1;
                }
                stats.nu_violations += out.diagnostics.nu_monotonicity_violations;
            }
            Err(_) => stats.infeasible += 1,
        }
        // Refinement in isolation: the accepted objective never drops.
        let pred = predict_admission_and_scalars(&p, &cfg);
        let mut diag = SolverDiagnostics::default();
        let gate = AdmissionVector(
            (0..p.num_users())
                .map(|k| p.certified[k] && pred.scores[k] >= cfg.eta_thresh)
                .collect(),
        );
        let repaired = strict_repair(&p, &gate, &pred.scalars, &cfg, &mut diag);
        let rest: Vec<usize> = (0..p.num_users()).filter(|&k| p.certified[k] && !repaired.admitted.0[k]).collect();
        let before = add_back(&p, repaired, &rest, &required_power_proxies(&p), &pred.scalars, &cfg, &mut diag);
        let after = refine_qos_safe(&p, &before, &cfg, &mut diag);
        if after.sum_rate < before.sum_rate || after.admitted != before.admitted {
            stats.refine_regressions += 1;
        }
        stats.nu_violations += diag.nu_monotonicity_violations;
    }
    stats.elapsed = start.elapsed();
    stats
}

fn solver_feasibility(stats: &FuzzStats) -> Outcome {
    within(Duration::from_secs(120), stats.elapsed)?;
    check(
        stats.infeasible == 0,
        format!(
            "{} fuzzed snapshots: {} infeasible, {:.1} s",
            stats.snapshots,
            stats.infeasible,
            stats.elapsed.as_secs_f64()
        ),
    )
}

fn small_instance_oracle() -> Outcome {
    let cfg = SolverConfig::default();
    let shape = Shape { k_max: 4, array: 4 };
    let (mut equal, mut worst_gap) = (0, 0.0f64);
    let total = 500;
    for seed in 0..total {
        let p = random_snapshot(500_000 + seed, &shape);
        let pred = predict_admission_and_scalars(&p, &cfg);
        let oracle = exhaustive_best_admission(&p, &pred.scalars, &cfg).map_err(|e| e.to_string())?;
        let got = solve_snapshot(&p, &cfg).map_err(|e| e.to_string())?.solution;
        equal += usize::from(got.qar == oracle.qar);
        worst_gap = worst_gap.max((oracle.qar - got.qar) * p.num_users() as f64);
    }
    let share = equal as f64 / total as f64;
    check(
        share >= 0.95 && worst_gap <= 1.0 + 1e-9,
        format!("{total} snapshots K<=4: {:.1}% equal, largest shortfall {worst_gap:.0} user(s)", 100.0 * share),
    )
}

fn monotonicity(stats: &FuzzStats) -> Outcome {
    check(
        stats.nu_violations == 0 && stats.refine_regressions == 0,
        format!(
            "criterion-6 corpus: {} nu-monotonicity violations, {} refinement regressions",
            stats.nu_violations, stats.refine_regressions
        ),
    )
}

fn paired_t(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return if mean > 0.0 { f64::INFINITY } else { 0.0 };
    }
    mean / (var / n).sqrt()
}

fn mode_ordering() -> Outcome {
    let start = Instant::now();
    let mut cfg = ScenarioConfig::default();
    cfg.run.snapshots = 500;
    let r = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let rate = |m| r.column(m, |x| x.sum_rate);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ideal, forecast, reactive, none) = (
        rate(CompensationMode::Ideal),
        rate(CompensationMode::Forecast),
        rate(CompensationMode::Reactive),
        rate(CompensationMode::None),
    );
    let t = paired_t(&ideal, &none);
    within(Duration::from_secs(300), start.elapsed())?;
    check(
        mean(&ideal) > mean(&none) && t > 3.0 && mean(&forecast) >= mean(&reactive),
        format!(
            "mean sum-rate ideal {:.3}, forecast {:.3}, reactive {:.3}, none {:.3}; paired t(ideal-none) {t:.1}",
            mean(&ideal),
            mean(&forecast),
            mean(&reactive),
            mean(&none)
        ),
    )
}

fn user_number_trend() -> Outcome {
    let mut qar = Vec::new();
    for k in [8, 10, 12] {
        let mut cfg = ScenarioConfig::default();
        cfg.users.count = k;
        cfg.run.snapshots = 500;
        cfg.compensation.modes = vec![CompensationMode::Forecast];
        let r = run_experiment(&cfg).map_err(|e| e.to_string())?;
        qar.push(r.mode(CompensationMode::Forecast).map(|m| m.qar.mean).unwrap_or(f64::NAN));
    }
    check(
        qar[0] > qar[1] && qar[1] > qar[2],
        format!("forecast-mode mean QAR at K=8/10/12 over 500 snapshots: {qar:.4?}"),
    )
}

fn forecast_metrics() -> Outcome {
    let truth = AttitudeSeries::new(0.1, vec![EulerZYX::from_degrees(-179.0, 0.0, 0.0); 4]).map_err(|e| e.to_string())?;
    let seam = ForecastOutput {
        origin: 0,
        horizons: vec![EulerZYX::from_degrees(179.0, 0.0, 0.0); 3],
        tag: "seam".into(),
        fallback: false,
    };
    let wrap = forecast_errors(&truth, [&seam], 1, 3).map_err(|e| e.to_string())?.full_horizon.mae_deg[0];

    let affine = AttitudeSeries::new(
        0.1,
        (0..300)
            .map(|i| {
                let t = i as f64;
                EulerZYX::from_degrees(170.0 + 0.7 * t, -2.0 + 0.01 * t, 1.5 - 0.02 * t)
            })
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let outputs = (63..288)
        .map(|o| forecast_linear_trend(&ForecastRequest::new(o, 64, 12, 6), &affine))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let err = forecast_errors(&affine, &outputs, 6, 12).map_err(|e| e.to_string())?;
    let worst = err.full_horizon.p99_abs_deg.into_iter().chain(err.full_horizon.mae_deg).fold(0.0, f64::max);
    check(
        (wrap - 2.0).abs() < 1e-9 && worst < 1e-9,
        format!("seam error {wrap:.6} deg, affine linear-trend error {worst:.1e} deg"),
    )
}

fn determinism() -> Outcome {
    let mut cfg = ScenarioConfig::default();
    cfg.run.snapshots = 60;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let r = run_experiment(&cfg).map_err(|e| e.to_string())?;
        emit_results(&r, dir.path().join(name)).map_err(|e| e.to_string())?;
        files.push(std::fs::read(dir.path().join(name).join(SNAPSHOTS_FILE)).map_err(|e| e.to_string())?);
    }
    check(files[0] == files[1], format!("two runs, {} bytes each, identical = {}", files[0].len(), files[0] == files[1]))
}

fn main() {
    let fuzz = fuzz_corpus();
    let criteria: Vec<Criterion> = vec![
        ("rotation suite", Box::new(rotation_suite)),
        ("constant-modulus analog beams", Box::new(constant_modulus)),
        ("quadratic-loss oracle", Box::new(quadratic_loss)),
        ("pointing certificate Monte Carlo", Box::new(certificate_bound)),
        ("conformal coverage", Box::new(conformal_coverage)),
        ("solver feasibility", Box::new(|| solver_feasibility(&fuzz))),
        ("small-instance oracle", Box::new(small_instance_oracle)),
        ("nu and refinement monotonicity", Box::new(|| monotonicity(&fuzz))),
        ("mode ordering", Box::new(mode_ordering)),
        ("user-number trend", Box::new(user_number_trend)),
        ("forecast-metric correctness", Box::new(forecast_metrics)),
        ("end-to-end determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({secs:.2} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
