//! Ground-user placement inside the coverage disc.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UserLayout {
    /// Uniform over the disc area.
    #[default]
    Uniform,
    /// Two Gaussian clusters with standard deviation `radius/10`.
    Clustered,
    /// Radial density ∝ r³, i.e. `r = R·U^{1/4}`.
    EdgeBiased,
}

fn uniform_point(rng: &mut impl Rng, radius: f64) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let a = TAU * rng.random::<f64>();
    (r * a.cos(), r * a.sin())
}

/// `k` positions on the ground plane (z = 0) within `radius` of the origin.
pub fn place_users(layout: UserLayout, k: usize, radius: f64, rng: &mut impl Rng) -> Vec<Vector3<f64>> {
    match layout {
        UserLayout::Uniform => (0..k)
            .map(|_| {
                let (x, y) = uniform_point(rng, radius);
                Vector3::new(x, y, 0.0)
            })
            .collect(),
        UserLayout::EdgeBiased => (0..k)
            .map(|_| {
                let r = radius * rng.random::<f64>().powf(0.25);
                let a = TAU * rng.random::<f64>();
                Vector3::new(r * a.cos(), r * a.sin(), 0.0)
            })
            .collect(),
        UserLayout::Clustered => {
            // Centers stay inside 0.7·R so clusters are not mostly clipped.
            let centers = [uniform_point(rng, 0.7 * radius), uniform_point(rng, 0.7 * radius)];
            let spread = Normal::new(0.0, radius / 10.0).expect("finite std");
            (0..k)
                .map(|i| {
                    let (cx, cy) = centers[i % 2];
                    loop {
                        let x = cx + spread.sample(rng);
                        let y = cy + spread.sample(rng);
                        if x.hypot(y) <= radius {
                            return Vector3::new(x, y, 0.0);
                        }
                    }
                })
                .collect()
        }
    }
}
