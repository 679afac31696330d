//! Offline pointing-error calibration.
//!
//! Forecast residuals over the target window are reduced to one number per
//! origin (the window maximum `Z_t`); the conformal order statistic of those
//! maxima is the deterministic radius `δ_ω`. Pooled residuals also give the
//! first two moments used by the statistical certificate.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{AttitudeSeries, ForecastOutput};
use crate::geometry::{euler_to_rotation, rotation_log_vee, RotationResidual};

/// Rotation residuals `Δω_{t+h|t}` for `h = d+1..=H_pred`.
pub fn window_residuals(
    truth: &AttitudeSeries,
    output: &ForecastOutput,
    delay: usize,
    horizon: usize,
) -> Result<Vec<RotationResidual>> {
    if delay < 1 || delay >= horizon {
        return Err(Error::InvalidArgument(format!(
            "decision delay {delay} must satisfy 1 <= d < H_pred = {horizon}"
        )));
    }
    (delay + 1..=horizon)
        .map(|h| {
            let slot = output.origin + h;
            let actual = truth
                .get(slot)
                .ok_or_else(|| Error::Range(format!("truth does not cover slot {slot} (origin {})", output.origin)))?;
            let predicted = output.at(h).ok_or_else(|| {
                Error::Range(format!("forecast at origin {} has no horizon {h}", output.origin))
            })?;
            rotation_log_vee(&euler_to_rotation(predicted)?, &euler_to_rotation(actual)?)
        })
        .collect()
}

/// `Z_t = max_h ‖Δω_{t+h|t}‖`.
pub fn target_window_max(residuals: &[RotationResidual]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::InvalidArgument("target window is empty".into()));
    }
    Ok(residuals.iter().map(RotationResidual::angle).fold(0.0, f64::max))
}

/// Conformal `(1−ρ)` quantile: the `⌈(1−ρ)(n+1)⌉`-th smallest `Z`, clamped to `n`.
pub fn calibrate_radius(z: &[f64], rho: f64) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::InsufficientData("no calibration windows".into()));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level rho = {rho} must lie in (0, 1)")));
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let index = ((1.0 - rho) * (n as f64 + 1.0)).ceil() as usize;
    Ok(sorted[index.clamp(1, n) - 1])
}

/// Unbiased sample mean and covariance of pooled residuals.
pub fn calibrate_moments(residuals: &[RotationResidual]) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    let n = residuals.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("moments need at least two residuals, got {n}")));
    }
    let mean = residuals.iter().map(|r| r.0).sum::<Vector3<f64>>() / n as f64;
    let scatter = residuals
        .iter()
        .map(|r| {
            let c = r.0 - mean;
            c * c.transpose()
        })
        .sum::<Matrix3<f64>>();
    let cov = scatter / (n - 1) as f64;
    Ok((mean, (cov + cov.transpose()) / 2.0))
}

/// Fraction of windows with `Z_t ≤ δ_ω`; NaN when there are none.
pub fn coverage_check(z: &[f64], delta_omega: f64) -> f64 {
    if z.is_empty() {
        return f64::NAN;
    }
    z.iter().filter(|&&v| v <= delta_omega).count() as f64 / z.len() as f64
}

/// Radius, confidence and moments produced by one calibration pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub delta_omega: f64,
    pub rho: f64,
    /// Target-window maxima, in origin order.
    pub window_max: Vec<f64>,
    pub mu_omega: Vector3<f64>,
    pub sigma_omega: Matrix3<f64>,
    pub delay: usize,
    pub horizon: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportFile {
    delta_omega_rad: f64,
    rho: f64,
    n: usize,
    mu_omega: [f64; 3],
    sigma_omega: [f64; 9],
    d: usize,
    #[serde(rename = "H_pred")]
    h_pred: usize,
}

impl CalibrationReport {
    /// Number of calibration windows.
    pub fn n(&self) -> usize {
        self.window_max.len()
    }

    pub fn to_toml(&self) -> String {
        let s = &self.sigma_omega;
        let file = ReportFile {
            delta_omega_rad: self.delta_omega,
            rho: self.rho,
            n: self.n(),
            mu_omega: [self.mu_omega.x, self.mu_omega.y, self.mu_omega.z],
            sigma_omega: std::array::from_fn(|i| s[(i / 3, i % 3)]),
            d: self.delay,
            h_pred: self.horizon,
        };
        toml::to_string(&file).expect("calibration report serializes")
    }

    /// Parses a stored report and returns it with its window count. The
    /// per-window maxima are not stored, so `window_max` comes back empty.
    pub fn from_toml(text: &str) -> Result<(Self, usize)> {
        let f: ReportFile = toml::from_str(text).map_err(|e| Error::Config(format!("calibration report: {e}")))?;
        let report = Self {
            delta_omega: f.delta_omega_rad,
            rho: f.rho,
            window_max: Vec::new(),
            mu_omega: Vector3::from(f.mu_omega),
            sigma_omega: Matrix3::from_row_slice(&f.sigma_omega),
            delay: f.d,
            horizon: f.h_pred,
        };
        report.validate()?;
        Ok((report, f.n))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<(Self, usize)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_omega >= 0.0) {
            return Err(Error::Invariant(format!("negative pointing radius {}", self.delta_omega)));
        }
        if self.window_max.iter().any(|z| !(*z >= 0.0)) {
            return Err(Error::Invariant("negative target-window maximum".into()));
        }
        let s = &self.sigma_omega;
        if (s - s.transpose()).amax() > 1e-12 || nalgebra::SymmetricEigen::new(*s).eigenvalues.min() < -1e-12 {
            return Err(Error::Invariant("residual covariance is not symmetric PSD".into()));
        }
        Ok(())
    }
}

/// Window maxima and pooled residuals for a batch of forecasts, in input order.
pub fn collect_windows(
    truth: &AttitudeSeries,
    outputs: &[ForecastOutput],
    delay: usize,
    horizon: usize,
) -> Result<(Vec<f64>, Vec<RotationResidual>)> {
    let per_origin: Vec<Vec<RotationResidual>> = outputs
        .par_iter()
        .map(|o| window_residuals(truth, o, delay, horizon))
        .collect::<Result<_>>()?;
    let z = per_origin.iter().map(|r| target_window_max(r)).collect::<Result<_>>()?;
    Ok((z, per_origin.into_iter().flatten().collect()))
}

/// Full calibration: residuals, radius, moments.
pub fn calibrate(
    truth: &AttitudeSeries,
    outputs: &[ForecastOutput],
    delay: usize,
    horizon: usize,
    rho: f64,
) -> Result<CalibrationReport> {
    let (window_max, pooled) = collect_windows(truth, outputs, delay, horizon)?;
    let delta_omega = calibrate_radius(&window_max, rho)?;
    let (mu_omega, sigma_omega) = calibrate_moments(&pooled)?;
    let report = CalibrationReport {
        delta_omega,
        rho,
        window_max,
        mu_omega,
        sigma_omega,
        delay,
        horizon,
    };
    report.validate()?;
    Ok(report)
}
