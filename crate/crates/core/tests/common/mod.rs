//! Random but physically built snapshot problems shared by the integration tests.
#![allow(dead_code)]

use hapbeam::array::{analog_beamformer, ArrayConfig};
use hapbeam::channel::{effective_channel, synthesize_channel, ChannelParams};
use hapbeam::geometry::{EulerZYX, WorldGeometry};
use hapbeam::solver::SnapshotProblem;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Normalized large-scale gain so the noise power sets the SNR scale.
pub const BETA: f64 = 1.0;

pub struct Shape {
    pub k_max: usize,
    pub array: usize,
}

/// One snapshot with random K ≤ `k_max`, r_min, κ, attitude and
/// certified set. Analog beams are steered at a slightly wrong attitude.
pub fn random_snapshot(seed: u64, shape: &Shape) -> SnapshotProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=shape.k_max);
    let cfg = ArrayConfig::half_wavelength(shape.array, shape.array, 0.01, k);
    let users = (0..k)
        .map(|_| {
            let r = 20_000.0 * rng.random::<f64>().sqrt();
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            Vector3::new(r * phi.cos(), r * phi.sin(), 0.0)
        })
        .collect();
    let geometry = WorldGeometry::new(Vector3::new(0.0, 0.0, 20_000.0), users).unwrap();
    let mut angle = |max_deg: f64| rng.random_range(-max_deg..=max_deg);
    let truth = EulerZYX::from_degrees(angle(6.0), angle(3.0), angle(3.0));
    let steer = EulerZYX::from_degrees(
        truth.yaw.to_degrees() + angle(0.5),
        truth.pitch.to_degrees() + angle(0.5),
        truth.roll.to_degrees() + angle(0.5),
    );
    let kappa = match rng.random_range(0..4) {
        0 => f64::INFINITY,
        1 => 1.0,
        2 => 10.0,
        _ => rng.random_range(0.0..20.0),
    };
    let snr_db: f64 = rng.random_range(0.0..30.0);
    let noise_power = BETA * 10f64.powf(-snr_db / 10.0);
    let params = ChannelParams {
        kappa: vec![kappa; k],
        beta: vec![BETA; k],
        noise_power,
        bandwidth: 1.0,
    };
    let channel = synthesize_channel(&cfg, &geometry, truth, &params, rng.random(), 0).unwrap();
    let beam = analog_beamformer(&cfg, &geometry, steer, 0, 0).unwrap();
    let h_eff = effective_channel(&channel.h, &beam.matrix).unwrap();
    let r_min = (0..k).map(|_| rng.random_range(0.0..8.0)).collect();
    let p_max = rng.random_range(0.1..10.0);
    let certified = (0..k).map(|_| rng.random_bool(0.85)).collect();
    let sigma_xi = (0..k).map(|_| rng.random_range(0.0..1e-3)).collect();
    SnapshotProblem::new(h_eff, &beam.matrix, r_min, p_max, noise_power, 1.0, 1.0)
        .unwrap()
        .with_certified(certified)
        .unwrap()
        .with_uncertainty(sigma_xi)
        .unwrap()
}
