//! Uniform planar array model.
//!
//! Covers phase-only steering vectors, analog beamformer schedules over the
//! target-slot window, the detuning/gain-loss model for pointing errors and
//! the certificate constants built from it.
//!
//! Element `(m, n)` with `m ∈ 0..M_x`, `n ∈ 0..M_y` is stored at index
//! `n·M_x + m` (the x index varies fastest).
//!
//! Detuning of user `k` is the change in spacing-scaled direction cosines
//! `ξ = (d_x/λ_c · Δs_x, d_y/λ_c · Δs_y)`, which makes
//! `c_x ξ_x² + c_y ξ_y²` with `c = π²(M²−1)/3` the second-order expansion of
//! the separable array-factor power loss.

use std::f64::consts::PI;

use nalgebra::{DVector, Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{los_to_body, EulerZYX, Rotation, RotationResidual, SteeringAngles, WorldGeometry};
use crate::linalg::{sym3_max_eigenvalue, sym3_min_eigenvalue, CMatrix};

/// Central-difference step for the detuning Jacobian, radians.
pub const JACOBIAN_STEP: f64 = 1e-5;

/// UPA dimensions, spacing and RF-chain count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub mx: usize,
    pub my: usize,
    /// Element spacing along x, meters.
    pub dx: f64,
    /// Element spacing along y, meters.
    pub dy: f64,
    /// Carrier wavelength, meters.
    pub wavelength: f64,
    pub n_rf: usize,
}

impl ArrayConfig {
    /// Half-wavelength spaced `mx × my` array with `n_rf` chains.
    pub fn half_wavelength(mx: usize, my: usize, wavelength: f64, n_rf: usize) -> Self {
        Self {
            mx,
            my,
            dx: wavelength / 2.0,
            dy: wavelength / 2.0,
            wavelength,
            n_rf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mx == 0 || self.my == 0 {
            return Err(Error::Config("array needs at least one element per axis".into()));
        }
        if !(self.dx > 0.0 && self.dy > 0.0 && self.wavelength > 0.0) {
            return Err(Error::Config("spacings and wavelength must be positive".into()));
        }
        if self.n_rf == 0 {
            return Err(Error::Config("at least one RF chain is required".into()));
        }
        Ok(())
    }

    pub fn num_elements(&self) -> usize {
        self.mx * self.my
    }

    pub fn c_x(&self) -> f64 {
        PI * PI * ((self.mx * self.mx) as f64 - 1.0) / 3.0
    }

    pub fn c_y(&self) -> f64 {
        PI * PI * ((self.my * self.my) as f64 - 1.0) / 3.0
    }
}

/// Phase-only beam toward `angles`, unit Euclidean norm.
pub fn steering_vector(cfg: &ArrayConfig, angles: SteeringAngles) -> DVector<Complex64> {
    let (sx, sy) = angles.direction_cosines();
    let k = 2.0 * PI / cfg.wavelength;
    let amp = 1.0 / (cfg.num_elements() as f64).sqrt();
    DVector::from_iterator(
        cfg.num_elements(),
        (0..cfg.my).flat_map(|n| {
            (0..cfg.mx).map(move |m| {
                let phase = k * (m as f64 * cfg.dx * sx + n as f64 * cfg.dy * sy);
                Complex64::from_polar(amp, phase)
            })
        }),
    )
}

/// Constant-modulus `M × N_RF` analog beamformer programmed for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogBeamformer {
    pub matrix: CMatrix,
    /// Target slot τ the beamformer is scheduled for.
    pub slot: usize,
    /// Forecast origin t that produced it.
    pub origin: usize,
    /// Steering angles used for each column.
    pub angles: Vec<SteeringAngles>,
}

impl AnalogBeamformer {
    /// `AᴴA`, the metric in which transmit power `‖A·D‖_F²` is measured.
    pub fn gram(&self) -> CMatrix {
        self.matrix.adjoint() * &self.matrix
    }
}

/// Steers one column per user toward its LoS as seen from `attitude`.
pub fn analog_beamformer(
    cfg: &ArrayConfig,
    geometry: &WorldGeometry,
    attitude: EulerZYX,
    slot: usize,
    origin: usize,
) -> Result<AnalogBeamformer> {
    cfg.validate()?;
    let k = geometry.num_users();
    if k != cfg.n_rf {
        return Err(Error::Config(format!(
            "{k} users but {} RF chains; one chain per user is required",
            cfg.n_rf
        )));
    }
    let mut matrix = CMatrix::zeros(cfg.num_elements(), k);
    let mut angles = Vec::with_capacity(k);
    for (col, e) in geometry.los.iter().enumerate() {
        let a = SteeringAngles::from_direction(&los_to_body(e, attitude)?);
        matrix.set_column(col, &steering_vector(cfg, a));
        angles.push(a);
    }
    Ok(AnalogBeamformer {
        matrix,
        slot,
        origin,
        angles,
    })
}

/// Beamformers `A_{t+h|t}` for `h ∈ {d+1, …, H_pred}` from one forecast.
///
/// `forecasts[h-1]` is the attitude forecast for horizon `h`.
pub fn build_analog_sequence(
    cfg: &ArrayConfig,
    geometry: &WorldGeometry,
    forecasts: &[EulerZYX],
    origin: usize,
    delay: usize,
    h_pred: usize,
) -> Result<Vec<AnalogBeamformer>> {
    if delay == 0 || delay >= h_pred {
        return Err(Error::InvalidArgument(format!(
            "decision delay {delay} must satisfy 1 <= d < H_pred = {h_pred}"
        )));
    }
    if forecasts.len() < h_pred {
        return Err(Error::Range(format!(
            "forecast covers {} horizons, {h_pred} required",
            forecasts.len()
        )));
    }
    (delay + 1..=h_pred)
        .map(|h| analog_beamformer(cfg, geometry, forecasts[h - 1], origin + h, origin))
        .collect()
}

/// Latest-cover rule: among all scheduled beamformers for slot `tau`, the
/// one whose forecast origin is most recent.
pub fn select_applied_beamformer<'a, I>(schedules: I, tau: usize) -> Result<&'a AnalogBeamformer>
where
    I: IntoIterator<Item = &'a AnalogBeamformer>,
{
    schedules
        .into_iter()
        .filter(|a| a.slot == tau)
        .max_by_key(|a| a.origin)
        .ok_or(Error::UncoveredSlot(tau))
}

/// Origin whose target-slot set most recently covers `tau` when forecasts
/// are issued every slot from `first_origin` on.
pub fn latest_covering_origin(tau: usize, delay: usize, first_origin: usize) -> Option<usize> {
    let t = tau.checked_sub(delay + 1)?;
    (t >= first_origin).then_some(t)
}

fn detuning_from_direction(cfg: &ArrayConfig, u: &Vector3<f64>, dw: &Vector3<f64>) -> Vector2<f64> {
    // R = R̂·exp(Δω̂)  ⇒  Rᵀe = exp(−Δω̂)·R̂ᵀe
    let perturbed = Rotation::exp(&(-dw)).apply(u);
    Vector2::new(
        cfg.dx / cfg.wavelength * (perturbed.x - u.x),
        cfg.dy / cfg.wavelength * (perturbed.y - u.y),
    )
}

/// Exact detuning of a beam programmed at `angles_hat` when the realized
/// attitude differs from the forecast by `dw`.
pub fn detuning_at(cfg: &ArrayConfig, angles_hat: SteeringAngles, dw: &RotationResidual) -> Vector2<f64> {
    detuning_from_direction(cfg, &angles_hat.direction(), dw.vector())
}

/// Exact detuning for user LoS `e` under forecast attitude `a_hat`.
pub fn detuning(cfg: &ArrayConfig, e: &Vector3<f64>, a_hat: EulerZYX, dw: &RotationResidual) -> Result<Vector2<f64>> {
    Ok(detuning_from_direction(cfg, &los_to_body(e, a_hat)?, dw.vector()))
}

/// `∂ξ/∂Δω` at `Δω = 0` by central differences.
pub fn detuning_jacobian_at(cfg: &ArrayConfig, angles: SteeringAngles) -> Matrix2x3<f64> {
    let u = angles.direction();
    let mut j = Matrix2x3::zeros();
    for axis in 0..3 {
        let mut step = Vector3::zeros();
        step[axis] = JACOBIAN_STEP;
        let fwd = detuning_from_direction(cfg, &u, &step);
        let bwd = detuning_from_direction(cfg, &u, &(-step));
        j.set_column(axis, &((fwd - bwd) / (2.0 * JACOBIAN_STEP)));
    }
    j
}

pub fn detuning_jacobian(cfg: &ArrayConfig, e: &Vector3<f64>, a_hat: EulerZYX) -> Result<Matrix2x3<f64>> {
    Ok(detuning_jacobian_at(
        cfg,
        SteeringAngles::from_direction(&los_to_body(e, a_hat)?),
    ))
}

/// Quadratic main-lobe loss `c_x ξ_x² + c_y ξ_y²`.
pub fn gain_loss_quadratic(cfg: &ArrayConfig, xi: &Vector2<f64>) -> f64 {
    cfg.c_x() * xi.x * xi.x + cfg.c_y() * xi.y * xi.y
}

fn array_factor(m: usize, xi: f64) -> f64 {
    let denom = m as f64 * (PI * xi).sin();
    if denom.abs() < 1e-300 {
        1.0
    } else {
        (m as f64 * PI * xi).sin() / denom
    }
}

/// `1 − |AF_x(ξ_x)·AF_y(ξ_y)|²`, valid inside the first nulls.
pub fn exact_gain_loss(cfg: &ArrayConfig, xi: &Vector2<f64>) -> Result<f64> {
    let inside = |m: usize, x: f64| m == 1 || (m as f64 * x).abs() < 1.0;
    if !inside(cfg.mx, xi.x) || !inside(cfg.my, xi.y) {
        return Err(Error::OutOfModel {
            xi_x: xi.x,
            xi_y: xi.y,
        });
    }
    let af = array_factor(cfg.mx, xi.x) * array_factor(cfg.my, xi.y);
    Ok(1.0 - af * af)
}

/// `Q = Jᵀ·diag(c_x, c_y)·J` at the given beam angles.
pub fn pointing_quadratic(cfg: &ArrayConfig, angles: SteeringAngles) -> Matrix3<f64> {
    quadratic_from_jacobian(cfg, &detuning_jacobian_at(cfg, angles))
}

pub fn quadratic_from_jacobian(cfg: &ArrayConfig, j: &Matrix2x3<f64>) -> Matrix3<f64> {
    let c = Matrix2::from_diagonal(&Vector2::new(cfg.c_x(), cfg.c_y()));
    let q = j.transpose() * c * j;
    (q + q.transpose()) * 0.5
}

/// Mean and covariance of the detuning under residual moments `(μ, Σ)`.
pub fn detuning_moments(j: &Matrix2x3<f64>, mu: &Vector3<f64>, sigma: &Matrix3<f64>) -> (Vector2<f64>, Matrix2<f64>) {
    (j * mu, j * sigma * j.transpose())
}

/// Scalar uncertainty proxy `tr(J Σ Jᵀ)`.
pub fn detuning_variance(j: &Matrix2x3<f64>, sigma: &Matrix3<f64>) -> f64 {
    (j * sigma * j.transpose()).trace()
}

/// Rectangular region of steering angles, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleBox {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
}

impl AngleBox {
    pub fn point(a: SteeringAngles) -> Self {
        Self {
            theta_lo: a.theta,
            theta_hi: a.theta,
            phi_lo: a.phi,
            phi_hi: a.phi,
        }
    }

    /// `±half_width` around `center` on both axes, θ clamped to `[0, π]`.
    pub fn around(center: SteeringAngles, half_width: f64) -> Self {
        Self {
            theta_lo: (center.theta - half_width).max(0.0),
            theta_hi: (center.theta + half_width).min(PI),
            phi_lo: center.phi - half_width,
            phi_hi: center.phi + half_width,
        }
    }

    pub fn contains(&self, a: SteeringAngles) -> bool {
        (self.theta_lo..=self.theta_hi).contains(&a.theta) && (self.phi_lo..=self.phi_hi).contains(&a.phi)
    }

    /// `n × n` grid of angles covering the box (the center when `n == 1`).
    pub fn grid(&self, n: usize) -> Vec<SteeringAngles> {
        let axis = |lo: f64, hi: f64, i: usize| {
            if n == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(SteeringAngles::new(
                    axis(self.theta_lo, self.theta_hi, i),
                    axis(self.phi_lo, self.phi_hi, j),
                ));
            }
        }
        out
    }
}

/// Worst-case `λ_max(Q_k)` over an `n × n` grid of the region.
pub fn spectral_bound(cfg: &ArrayConfig, region: &AngleBox, grid: usize) -> Result<f64> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    if region.theta_lo > region.theta_hi || region.phi_lo > region.phi_hi {
        return Err(Error::InvalidArgument("empty angular region".into()));
    }
    Ok(region
        .grid(grid)
        .into_iter()
        .map(|a| sym3_max_eigenvalue(&pointing_quadratic(cfg, a)))
        .fold(0.0, f64::max))
}

/// Users whose worst-case loss `L_k² δ_ω²` stays within `epsilon`.
pub fn certify_users(l_sq: &[f64], delta_omega: f64, epsilon: f64) -> Vec<bool> {
    let r2 = delta_omega * delta_omega;
    l_sq.iter().map(|&l| l * r2 <= epsilon).collect()
}

/// Expected-loss certificate `μᵀQμ + tr(QΣ) ≤ ε`.
pub fn moment_certificate(q: &Matrix3<f64>, mu: &Vector3<f64>, sigma: &Matrix3<f64>, epsilon: f64) -> Result<bool> {
    Ok(expected_loss(q, mu, sigma)? <= epsilon)
}

pub fn expected_loss(q: &Matrix3<f64>, mu: &Vector3<f64>, sigma: &Matrix3<f64>) -> Result<f64> {
    let scale = sigma.amax().max(1e-300);
    if (sigma - sigma.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidArgument("Σ_ω is not symmetric".into()));
    }
    if sym3_min_eigenvalue(sigma) < -1e-12 * scale {
        return Err(Error::InvalidArgument("Σ_ω is not positive semidefinite".into()));
    }
    Ok((mu.transpose() * q * mu)[(0, 0)] + (q * sigma).trace())
}

/// Per-user Jacobians and quadratic forms at the operating point of an
/// applied beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningModel {
    pub jacobians: Vec<Matrix2x3<f64>>,
    pub quadratics: Vec<Matrix3<f64>>,
    pub c_x: f64,
    pub c_y: f64,
}

impl DetuningModel {
    pub fn at_angles(cfg: &ArrayConfig, angles: &[SteeringAngles]) -> Self {
        let jacobians: Vec<_> = angles.iter().map(|&a| detuning_jacobian_at(cfg, a)).collect();
        let quadratics = jacobians.iter().map(|j| quadratic_from_jacobian(cfg, j)).collect();
        Self {
            jacobians,
            quadratics,
            c_x: cfg.c_x(),
            c_y: cfg.c_y(),
        }
    }

    /// `σ̂²_ξ,k` for every user.
    pub fn variance_proxies(&self, sigma: &Matrix3<f64>) -> Vec<f64> {
        self.jacobians.iter().map(|j| detuning_variance(j, sigma)).collect()
    }
}

/// Offline pointing-feasibility certificate constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointingCertificate {
    pub l_sq: Vec<f64>,
    pub regions: Vec<AngleBox>,
    pub epsilon: f64,
    pub rho: f64,
    pub rho_s: f64,
}

impl PointingCertificate {
    /// Regions of `±half_width` around each user's level-attitude beam.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        cfg: &ArrayConfig,
        geometry: &WorldGeometry,
        nominal: EulerZYX,
        half_width: f64,
        grid: usize,
        epsilon: f64,
        rho: f64,
        rho_s: f64,
    ) -> Result<Self> {
        let mut l_sq = Vec::with_capacity(geometry.num_users());
        let mut regions = Vec::with_capacity(geometry.num_users());
        for e in &geometry.los {
            let center = SteeringAngles::from_direction(&los_to_body(e, nominal)?);
            let region = AngleBox::around(center, half_width);
            l_sq.push(spectral_bound(cfg, &region, grid)?);
            regions.push(region);
        }
        Ok(Self {
            l_sq,
            regions,
            epsilon,
            rho,
            rho_s,
        })
    }

    pub fn certified(&self, delta_omega: f64) -> Vec<bool> {
        certify_users(&self.l_sq, delta_omega, self.epsilon)
    }

    /// Lower bound on the probability that the certificate holds.
    pub fn confidence(&self) -> f64 {
        1.0 - (self.rho + self.rho_s)
    }
}
