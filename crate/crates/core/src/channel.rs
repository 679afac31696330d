//! Rician downlink channel synthesis and link evaluation.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array::{steering_vector, ArrayConfig};
use crate::error::{Error, Result};
use crate::geometry::{los_to_body, EulerZYX, SteeringAngles, WorldGeometry};
use crate::linalg::CMatrix;

/// Named Rician strength settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RicianPreset {
    /// κ = 10
    RicianStrong,
    /// κ = 1
    RicianWeak,
    /// κ = ∞
    PureLos,
}

impl RicianPreset {
    pub fn kappa(self) -> f64 {
        match self {
            RicianPreset::RicianStrong => 10.0,
            RicianPreset::RicianWeak => 1.0,
            RicianPreset::PureLos => f64::INFINITY,
        }
    }
}

/// How the per-user large-scale gain β_k is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LargeScaleModel {
    /// `(λ_c / (4π d_k))²`
    #[default]
    FreeSpace,
    /// `β_k = 1`
    Normalized,
}

impl LargeScaleModel {
    pub fn gains(self, wavelength: f64, geometry: &WorldGeometry) -> Vec<f64> {
        match self {
            LargeScaleModel::FreeSpace => geometry
                .distance
                .iter()
                .map(|d| (wavelength / (4.0 * PI * d)).powi(2))
                .collect(),
            LargeScaleModel::Normalized => vec![1.0; geometry.num_users()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Linear Rician factor per user; `f64::INFINITY` for pure LoS.
    pub kappa: Vec<f64>,
    /// Linear large-scale power gain per user.
    pub beta: Vec<f64>,
    /// Noise power σ², watts.
    pub noise_power: f64,
    /// Bandwidth B, hertz.
    pub bandwidth: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.kappa.len() != self.beta.len() {
            return Err(Error::InvalidArgument("kappa and beta lengths differ".into()));
        }
        if self.kappa.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::InvalidArgument("Rician factor must be non-negative".into()));
        }
        if self.beta.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidArgument("large-scale gain must be positive".into()));
        }
        if !(self.noise_power > 0.0) || !(self.bandwidth > 0.0) {
            return Err(Error::InvalidArgument("noise power and bandwidth must be positive".into()));
        }
        Ok(())
    }
}

/// `M × K` downlink channel, column `k` is `h_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub h: CMatrix,
    pub slot: usize,
}

/// LoS component `√(β_k M)·a(θ̃, φ̃)·e^{−j2πd_k/λ_c}` at the true attitude.
pub fn los_component(
    cfg: &ArrayConfig,
    geometry: &WorldGeometry,
    attitude: EulerZYX,
    beta: &[f64],
    k: usize,
) -> Result<DVector<Complex64>> {
    let angles = SteeringAngles::from_direction(&los_to_body(&geometry.los[k], attitude)?);
    let m = cfg.num_elements() as f64;
    let phase = Complex64::from_polar((beta[k] * m).sqrt(), -2.0 * PI * geometry.distance[k] / cfg.wavelength);
    Ok(steering_vector(cfg, angles) * phase)
}

/// Draws `H` for one slot; identical seeds give bit-identical channels.
pub fn synthesize_channel(
    cfg: &ArrayConfig,
    geometry: &WorldGeometry,
    true_attitude: EulerZYX,
    params: &ChannelParams,
    seed: u64,
    slot: usize,
) -> Result<ChannelMatrix> {
    params.validate()?;
    let k_users = geometry.num_users();
    if params.kappa.len() != k_users {
        return Err(Error::InvalidArgument(format!(
            "channel parameters for {} users, geometry has {k_users}",
            params.kappa.len()
        )));
    }
    let m = cfg.num_elements();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = CMatrix::zeros(m, k_users);
    for k in 0..k_users {
        let los = los_component(cfg, geometry, true_attitude, &params.beta, k)?;
        let kappa = params.kappa[k];
        let (w_los, w_nlos) = if kappa.is_infinite() {
            (1.0, 0.0)
        } else {
            ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
        };
        // CN(0, β): real and imaginary parts each N(0, β/2).
        let std = (params.beta[k] / 2.0).sqrt();
        for i in 0..m {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let nlos = Complex64::new(re * std, im * std);
            h[(i, k)] = los[i] * w_los + nlos * w_nlos;
        }
    }
    Ok(ChannelMatrix { h, slot })
}

/// `H_eff = Hᴴ·A` (`K × N_RF`).
pub fn effective_channel(h: &CMatrix, a: &CMatrix) -> Result<CMatrix> {
    if h.nrows() != a.nrows() {
        return Err(Error::InvalidArgument(format!(
            "channel has {} antennas, beamformer {}",
            h.nrows(),
            a.nrows()
        )));
    }
    Ok(h.adjoint() * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRate {
    pub sinr: f64,
    /// bit/s
    pub rate: f64,
}

/// Per-user SINR and rate for digital beamformer `D` (`N_RF × K`).
pub fn sinr_and_rates(h_eff: &CMatrix, d: &CMatrix, noise_power: f64, bandwidth: f64) -> Vec<LinkRate> {
    let g = h_eff * d;
    (0..g.nrows())
        .map(|k| {
            let mut interference = 0.0;
            let mut signal = 0.0;
            for j in 0..g.ncols() {
                let p = g[(k, j)].norm_sqr();
                if j == k {
                    signal = p;
                } else {
                    interference += p;
                }
            }
            let sinr = signal / (interference + noise_power);
            LinkRate {
                sinr,
                rate: bandwidth * (1.0 + sinr).log2(),
            }
        })
        .collect()
}
