mod common;

use common::{random_snapshot, Shape};
use hapbeam::channel::sinr_and_rates;
use hapbeam::solver::{
    check_solution, exhaustive_best_admission, predict_admission_and_scalars, priority_costs, solve_snapshot,
    Priority, SnapshotProblem, SolverConfig,
};
use hapbeam::linalg::CMatrix;
use num_complex::Complex64;

#[test]
fn fuzzed_snapshots_meet_every_constraint() {
    let cfg = SolverConfig::default();
    let shape = Shape { k_max: 12, array: 6 };
    let mut admitted_any = 0;
    for seed in 0..2048 {
        let p = random_snapshot(seed, &shape);
        let out = solve_snapshot(&p, &cfg).unwrap();
        let s = &out.solution;
        check_solution(&p, s).unwrap();
        assert!(s.power <= p.p_max, "seed {seed}");
        // Rates recomputed independently from the precoder.
        let rates = sinr_and_rates(&p.h_eff, &s.d, p.noise_power, p.bandwidth);
        for (k, link) in rates.iter().enumerate() {
            if s.admitted.0[k] {
                assert!(p.certified[k]);
                assert!(link.rate >= p.r_min[k], "seed {seed} user {k}");
            }
        }
        assert!(out.diagnostics.max_bisection_steps <= cfg.max_bisection);
        assert!(out.diagnostics.refine_iterations <= cfg.max_refine);
        assert!(out.diagnostics.drops <= p.num_users());
        assert_eq!(out.diagnostics.nu_monotonicity_violations, 0);
        let qar = s.admitted.count() as f64 / p.num_users() as f64;
        assert_eq!(s.qar, qar);
        admitted_any += usize::from(s.admitted.count() > 0);
    }
    assert!(admitted_any > 1000, "corpus too hard to be informative: {admitted_any}");
}

#[test]
fn small_instances_track_the_exhaustive_oracle() {
    let cfg = SolverConfig::default();
    let shape = Shape { k_max: 4, array: 4 };
    let (mut matched, total) = (0, 200);
    for seed in 0..total {
        let p = random_snapshot(10_000 + seed, &shape);
        let pred = predict_admission_and_scalars(&p, &cfg);
        let oracle = exhaustive_best_admission(&p, &pred.scalars, &cfg).unwrap();
        let got = solve_snapshot(&p, &cfg).unwrap().solution;
        let k = p.num_users() as f64;
        assert!(got.qar >= oracle.qar - 1.0 / k - 1e-12, "seed {seed}");
        matched += usize::from(got.admitted.count() >= oracle.admitted.count());
    }
    assert!(matched as f64 >= 0.95 * total as f64, "{matched}/{total}");
}

#[test]
fn solving_is_deterministic() {
    let shape = Shape { k_max: 12, array: 6 };
    for priority in [Priority::QosDifficulty, Priority::ChannelGain, Priority::Random] {
        let cfg = SolverConfig {
            priority,
            priority_seed: 99,
            ..SolverConfig::default()
        };
        for seed in 0..20 {
            let p = random_snapshot(seed, &shape);
            assert_eq!(solve_snapshot(&p, &cfg).unwrap().solution, solve_snapshot(&p, &cfg).unwrap().solution);
        }
    }
}

fn diagonal(gains: &[f64], r_min: Vec<f64>) -> SnapshotProblem {
    let k = gains.len();
    let h = CMatrix::from_fn(k, k, |i, j| if i == j { Complex64::from(gains[i].sqrt()) } else { Complex64::from(0.0) });
    SnapshotProblem::new(h, &CMatrix::identity(k, k), r_min, 10.0, 1.0, 1.0, 0.0).unwrap()
}

fn order(costs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..costs.len()).collect();
    idx.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    idx
}

#[test]
fn priority_variants_rank_users_as_described() {
    // User 0: strongest channel but a very demanding target.
    let p = diagonal(&[100.0, 4.0, 2.0, 1.0], vec![20.0, 1.0, 1.0, 1.0]);
    let gain = SolverConfig {
        priority: Priority::ChannelGain,
        ..SolverConfig::default()
    };
    let qos = SolverConfig::default();
    assert_eq!(order(&priority_costs(&p, &gain))[0], 0);
    assert_eq!(*order(&priority_costs(&p, &qos)).last().unwrap(), 0);

    // Symmetric users: every ordering admits the same number.
    let sym = diagonal(&[2.0; 4], vec![1.0; 4]);
    let qars: Vec<f64> = [Priority::QosDifficulty, Priority::ChannelGain, Priority::Random]
        .into_iter()
        .map(|priority| {
            let cfg = SolverConfig {
                priority,
                priority_seed: 5,
                ..SolverConfig::default()
            };
            solve_snapshot(&sym, &cfg).unwrap().solution.qar
        })
        .collect();
    assert!(qars.iter().all(|q| *q == qars[0]), "{qars:?}");

    let random = |seed| {
        priority_costs(
            &p,
            &SolverConfig {
                priority: Priority::Random,
                priority_seed: seed,
                ..SolverConfig::default()
            },
        )
    };
    assert_eq!(random(7), random(7));
    assert_ne!(random(7), random(8));
}
