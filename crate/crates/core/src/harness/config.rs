//! Scenario configuration (TOML). Every section and key is optional; unknown
//! keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::attitude::AttitudeProcess;
use super::users::UserLayout;
use crate::array::ArrayConfig;
use crate::channel::{LargeScaleModel, RicianPreset};
use crate::error::{Error, Result};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub array: ArraySection,
    pub hap: HapSection,
    pub users: UsersSection,
    pub channel: ChannelSection,
    pub qos: QosSection,
    pub horizon: HorizonSection,
    pub forecast: ForecastSection,
    pub attitude: AttitudeSection,
    pub compensation: CompensationSection,
    pub admission: SolverConfig,
    pub calibration: CalibrationSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySection {
    pub mx: usize,
    pub my: usize,
    /// Element spacing, meters; half a wavelength when omitted.
    pub dx: Option<f64>,
    pub dy: Option<f64>,
    /// Carrier wavelength λ_c, meters.
    pub wavelength: f64,
    /// RF chains; must equal the user count when given.
    pub n_rf: Option<usize>,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            mx: 12,
            my: 12,
            dx: None,
            dy: None,
            wavelength: 0.01,
            n_rf: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HapSection {
    /// Meters above the ground plane.
    pub altitude: f64,
    pub x: f64,
    pub y: f64,
}

impl Default for HapSection {
    fn default() -> Self {
        Self {
            altitude: 20_000.0,
            x: 0.0,
            y: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UsersSection {
    pub count: usize,
    pub layout: UserLayout,
    /// Coverage-disc radius around the HAP's ground projection, meters.
    pub radius: f64,
}

impl Default for UsersSection {
    fn default() -> Self {
        Self {
            count: 10,
            layout: UserLayout::Uniform,
            radius: 20_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub preset: RicianPreset,
    pub large_scale: LargeScaleModel,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            preset: RicianPreset::RicianStrong,
            large_scale: LargeScaleModel::FreeSpace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QosSection {
    /// Per-user rate target, bit/s.
    pub r_min: f64,
    /// Transmit power budget, watts.
    pub p_max: f64,
    /// Noise power σ², watts.
    pub noise_power: f64,
    /// Bandwidth B, hertz.
    pub bandwidth: f64,
    /// Circuit power P_c, watts.
    pub circuit_power: f64,
}

impl Default for QosSection {
    fn default() -> Self {
        Self {
            r_min: 11.0,
            p_max: 10.0,
            noise_power: 1e-16,
            bandwidth: 1.0,
            circuit_power: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HorizonSection {
    /// Slot length ΔT, seconds.
    pub sample_period: f64,
    /// Decision delay d, slots.
    pub delay: usize,
    /// Forecast horizon H_pred, slots.
    pub horizon: usize,
    /// Look-back window L_win, slots.
    pub window: usize,
}

impl Default for HorizonSection {
    fn default() -> Self {
        Self {
            sample_period: 0.1,
            delay: 6,
            horizon: 12,
            window: 192,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecastMethod {
    Persistence,
    Linear,
    #[default]
    Ar,
    /// Replay of a forecast CSV produced elsewhere.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastSection {
    pub method: ForecastMethod,
    pub ar_order: usize,
    /// Forecast CSV for `method = "external"`.
    pub path: Option<PathBuf>,
}

impl Default for ForecastSection {
    fn default() -> Self {
        Self {
            method: ForecastMethod::Ar,
            ar_order: 8,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttitudeSection {
    /// Telemetry CSV to use instead of the synthetic process.
    pub telemetry: Option<PathBuf>,
    pub process: AttitudeProcess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompensationMode {
    /// Fixed nominal attitude.
    None,
    /// Newest true attitude available by the decision deadline.
    Reactive,
    /// Attitude forecast for the target slot.
    Forecast,
    /// True attitude at the target slot.
    Ideal,
}

impl CompensationMode {
    pub const ALL: [CompensationMode; 4] = [Self::None, Self::Reactive, Self::Forecast, Self::Ideal];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Reactive => "reactive",
            Self::Forecast => "forecast",
            Self::Ideal => "ideal",
        }
    }
}

impl std::fmt::Display for CompensationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompensationSection {
    /// Modes evaluated on every snapshot (paired on the same channel draw).
    pub modes: Vec<CompensationMode>,
    /// Attitude assumed by `none`, degrees (yaw, pitch, roll).
    pub nominal_deg: [f64; 3],
}

impl Default for CompensationSection {
    fn default() -> Self {
        Self {
            modes: CompensationMode::ALL.to_vec(),
            nominal_deg: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    /// Miscoverage level ρ of the pointing radius.
    pub rho: f64,
    /// Tolerated normalized gain loss ε.
    pub epsilon: f64,
    /// Probability that realized angles leave S_k.
    pub rho_s: f64,
    /// Half-width of the S_k angle box, degrees.
    pub box_half_width_deg: f64,
    /// Grid points per axis for the spectral bound.
    pub grid: usize,
    /// Restrict admission to certified users.
    pub enforce: bool,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            rho: 0.1,
            epsilon: 0.05,
            rho_s: 0.0,
            box_half_width_deg: 3.0,
            grid: 33,
            enforce: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// Test-split snapshots to evaluate.
    pub snapshots: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 1, snapshots: 200 }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes relative data paths relative to the config file's directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.forecast.path, &mut self.attitude.telemetry].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn array_config(&self) -> ArrayConfig {
        let a = &self.array;
        ArrayConfig {
            mx: a.mx,
            my: a.my,
            dx: a.dx.unwrap_or(a.wavelength / 2.0),
            dy: a.dy.unwrap_or(a.wavelength / 2.0),
            wavelength: a.wavelength,
            n_rf: self.users.count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.array.mx == 0 || self.array.my == 0 {
            return Err(Error::Config("array dimensions must be positive".into()));
        }
        positive("array.wavelength", self.array.wavelength)?;
        for (name, v) in [("array.dx", self.array.dx), ("array.dy", self.array.dy)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if self.users.count == 0 {
            return Err(Error::Config("users.count must be at least 1".into()));
        }
        if let Some(n) = self.array.n_rf {
            if n != self.users.count {
                return Err(Error::Config(format!(
                    "array.n_rf = {n} must equal users.count = {}",
                    self.users.count
                )));
            }
        }
        positive("hap.altitude", self.hap.altitude)?;
        positive("users.radius", self.users.radius)?;
        let q = &self.qos;
        positive("qos.p_max", q.p_max)?;
        positive("qos.noise_power", q.noise_power)?;
        positive("qos.bandwidth", q.bandwidth)?;
        if !(q.r_min >= 0.0 && q.r_min.is_finite()) || !(q.circuit_power >= 0.0 && q.circuit_power.is_finite()) {
            return Err(Error::Config("qos.r_min and qos.circuit_power must be non-negative".into()));
        }
        let h = &self.horizon;
        positive("horizon.sample_period", h.sample_period)?;
        if h.delay < 1 || h.delay >= h.horizon {
            return Err(Error::Config(format!(
                "horizon.delay = {} must satisfy 1 <= d < horizon.horizon = {}",
                h.delay, h.horizon
            )));
        }
        if h.window < 2 {
            return Err(Error::Config("horizon.window must be at least 2".into()));
        }
        if self.forecast.method == ForecastMethod::Ar && h.window < 4 * self.forecast.ar_order.max(1) {
            return Err(Error::Config(format!(
                "horizon.window = {} is shorter than 4 × forecast.ar_order = {}",
                h.window, self.forecast.ar_order
            )));
        }
        if self.forecast.method == ForecastMethod::Ar && self.forecast.ar_order == 0 {
            return Err(Error::Config("forecast.ar_order must be positive".into()));
        }
        if self.forecast.method == ForecastMethod::External && self.forecast.path.is_none() {
            return Err(Error::Config("forecast.method = \"external\" needs forecast.path".into()));
        }
        self.attitude.process.validate()?;
        if self.compensation.modes.is_empty() {
            return Err(Error::Config("compensation.modes must list at least one mode".into()));
        }
        if self.compensation.nominal_deg.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("compensation.nominal_deg must be finite".into()));
        }
        let c = &self.calibration;
        if !(c.rho > 0.0 && c.rho < 1.0) || !(c.rho_s >= 0.0 && c.rho + c.rho_s < 1.0) {
            return Err(Error::Config("calibration.rho must lie in (0, 1) and rho + rho_s < 1".into()));
        }
        positive("calibration.epsilon", c.epsilon)?;
        if !(c.box_half_width_deg >= 0.0) || c.grid == 0 {
            return Err(Error::Config("calibration box half-width must be >= 0 and grid >= 1".into()));
        }
        let s = &self.admission;
        if !(s.eta_thresh.is_finite()) || s.max_bisection == 0 || !(s.c_omega >= 0.0) {
            return Err(Error::Config("admission settings out of range".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(ScenarioConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn partial_and_unknown_keys() {
        let cfg = ScenarioConfig::from_toml("[users]\ncount = 8\nlayout = \"edge-biased\"\n[channel]\npreset = \"pure-los\"").unwrap();
        assert_eq!(cfg.users.count, 8);
        assert_eq!(cfg.users.layout, UserLayout::EdgeBiased);
        assert_eq!(cfg.channel.preset, RicianPreset::PureLos);
        assert_eq!(cfg.array_config().n_rf, 8);
        for bad in [
            "[users]\ncont = 8",
            "[nonsense]\nx = 1",
            "[channel]\npreset = \"rician-medium\"",
            "[compensation]\nmodes = [\"psychic\"]",
            "[qos]\np_max = -1.0",
            "[horizon]\ndelay = 12\nhorizon = 12",
            "[array]\nn_rf = 4",
        ] {
            assert!(matches!(ScenarioConfig::from_toml(bad), Err(Error::Config(_))), "{bad}");
        }
    }
}
