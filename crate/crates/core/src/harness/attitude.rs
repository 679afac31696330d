//! Synthetic platform attitude: a few slow sinusoids per axis plus AR(1) jitter.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::AttitudeSeries;
use crate::geometry::EulerZYX;
use crate::rng::{streams, substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttitudeProcess {
    /// Inclusive range for the number of sinusoids per axis.
    pub sinusoids: [usize; 2],
    /// Sinusoid period range, seconds.
    pub period_s: [f64; 2],
    /// Per-sinusoid amplitude cap for (yaw, pitch, roll), degrees.
    pub max_amplitude_deg: [f64; 3],
    /// AR(1) noise coefficient.
    pub ar_coefficient: f64,
    /// AR(1) innovation standard deviation, degrees.
    pub innovation_deg: f64,
}

impl Default for AttitudeProcess {
    fn default() -> Self {
        Self {
            sinusoids: [2, 3],
            period_s: [3.0, 30.0],
            max_amplitude_deg: [6.0, 3.0, 3.0],
            ar_coefficient: 0.95,
            innovation_deg: 0.05,
        }
    }
}

/// One sinusoidal component, amplitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude_deg: f64,
    pub period_s: f64,
    pub phase: f64,
}

impl AttitudeProcess {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.sinusoids;
        if lo > hi {
            return Err(Error::Config("attitude.sinusoids must be [min, max]".into()));
        }
        let [p_lo, p_hi] = self.period_s;
        if !(p_lo > 0.0 && p_lo <= p_hi) {
            return Err(Error::Config("attitude.period_s must be a positive [min, max] range".into()));
        }
        if self.max_amplitude_deg.iter().any(|a| !(*a >= 0.0)) || !(self.innovation_deg >= 0.0) {
            return Err(Error::Config("attitude amplitudes and innovation must be non-negative".into()));
        }
        if !(self.ar_coefficient.abs() < 1.0) {
            return Err(Error::Config("attitude.ar_coefficient must lie in (-1, 1)".into()));
        }
        Ok(())
    }

    /// Sinusoid draws for (yaw, pitch, roll) under `seed`.
    pub fn components(&self, seed: u64) -> [Vec<Sinusoid>; 3] {
        let mut rng = substream(seed, streams::ATTITUDE, 0);
        std::array::from_fn(|axis| {
            let n = rng.random_range(self.sinusoids[0]..=self.sinusoids[1]);
            (0..n)
                .map(|_| Sinusoid {
                    amplitude_deg: self.max_amplitude_deg[axis] * rng.random::<f64>(),
                    period_s: rng.random_range(self.period_s[0]..=self.period_s[1]),
                    phase: TAU * rng.random::<f64>(),
                })
                .collect()
        })
    }
}

/// Deterministic synthetic attitude series of `length` samples.
pub fn generate_attitude_series(process: &AttitudeProcess, seed: u64, length: usize, period: f64) -> Result<AttitudeSeries> {
    process.validate()?;
    let comps = process.components(seed);
    let mut rng = substream(seed, streams::ATTITUDE, 1);
    let phi = process.ar_coefficient;
    let innovation = Normal::new(0.0, process.innovation_deg).expect("finite std");
    let stationary = Normal::new(0.0, process.innovation_deg / (1.0 - phi * phi).sqrt()).expect("finite std");
    let mut noise: [f64; 3] = std::array::from_fn(|_| stationary.sample(&mut rng));
    let mut samples = Vec::with_capacity(length);
    for i in 0..length {
        let t = i as f64 * period;
        let deg: [f64; 3] = std::array::from_fn(|axis| {
            let s: f64 = comps[axis]
                .iter()
                .map(|c| c.amplitude_deg * (TAU * t / c.period_s + c.phase).sin())
                .sum();
            s + noise[axis]
        });
        samples.push(EulerZYX::from_degrees(deg[0], deg[1], deg[2]));
        for n in &mut noise {
            *n = phi * *n + innovation.sample(&mut rng);
        }
    }
    AttitudeSeries::new(period, samples)
}
