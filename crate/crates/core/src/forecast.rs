//! Windowed attitude forecasting.
//!
//! Every forecaster looks at the last `L_win` samples up to and including the
//! origin slot and returns `H_pred` attitudes for the slots after it. Only
//! horizons `d+1..=H_pred` can ever steer a beam; the rest are still produced
//! so that error reports cover the full horizon.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_pi, EulerZYX};

/// Uniformly sampled yaw/pitch/roll telemetry (radians, yaw wrapped).
#[derive(Debug, Clone, PartialEq)]
pub struct AttitudeSeries {
    period: f64,
    samples: Vec<EulerZYX>,
}

impl AttitudeSeries {
    pub fn new(period: f64, samples: Vec<EulerZYX>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample period {period} must be positive")));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite attitude at sample {i}")));
        }
        let samples = samples
            .into_iter()
            .map(|s| EulerZYX::new(wrap_pi(s.yaw), s.pitch, s.roll))
            .collect();
        Ok(Self { period, samples })
    }

    /// Sample period ΔT, seconds.
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[EulerZYX] {
        &self.samples
    }

    pub fn get(&self, slot: usize) -> Option<EulerZYX> {
        self.samples.get(slot).copied()
    }

    /// Reads the telemetry CSV (`t,yaw_deg,pitch_deg,roll_deg`).
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let rows = read_numeric_csv(reader, &["t", "yaw_deg", "pitch_deg", "roll_deg"])?;
        if rows.len() < 2 {
            return Err(Error::InsufficientData("telemetry needs at least two samples".into()));
        }
        let t0 = rows[0].1[0];
        let period = rows[1].1[0] - t0;
        if !(period > 0.0) {
            return Err(Error::parse(rows[1].0, "t", "time stamps must increase"));
        }
        let tol = 1e-3 * period;
        let mut samples = Vec::with_capacity(rows.len());
        for (i, (line, v)) in rows.iter().enumerate() {
            if (v[0] - t0 - i as f64 * period).abs() > tol {
                return Err(Error::parse(*line, "t", format!("non-uniform sampling (expected step {period})")));
            }
            samples.push(EulerZYX::from_degrees(v[1], v[2], v[3]));
        }
        Self::new(period, samples)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_csv_writer(&mut file).map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_writer(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "t,yaw_deg,pitch_deg,roll_deg")?;
        for (i, s) in self.samples.iter().enumerate() {
            let t = i as f64 * self.period;
            writeln!(w, "{t:?},{:?},{:?},{:?}", to_degrees_exact(s.yaw), to_degrees_exact(s.pitch), to_degrees_exact(s.roll))?;
        }
        Ok(())
    }
}

/// Degrees value that converts back to exactly `rad` when one exists within
/// a few ulps of `rad.to_degrees()`; otherwise the nearest value.
pub fn to_degrees_exact(rad: f64) -> f64 {
    let d0 = rad.to_degrees();
    if d0.to_radians() == rad || !d0.is_finite() {
        return d0;
    }
    let (mut up, mut down) = (d0, d0);
    for _ in 0..8 {
        up = up.next_up();
        down = down.next_down();
        if up.to_radians() == rad {
            return up;
        }
        if down.to_radians() == rad {
            return down;
        }
    }
    d0
}

/// Parses a CSV with an exact header; returns `(line, values)` per row.
fn read_numeric_csv(reader: impl Read, header: &[&str]) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let got = rdr.headers().map_err(|e| Error::parse(1, "header", e.to_string()))?.clone();
    if got.len() != header.len() || got.iter().zip(header).any(|(a, b)| a != *b) {
        return Err(Error::parse(1, "header", format!("expected `{}`", header.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, "record", e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::parse(line, "record", format!("expected {} fields", header.len())));
        }
        let mut vals = Vec::with_capacity(header.len());
        for (field, name) in rec.iter().zip(header) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(line, *name, format!("`{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(Error::parse(line, *name, "value is not finite"));
            }
            vals.push(v);
        }
        rows.push((line, vals));
    }
    Ok(rows)
}

/// Where a forecast starts and how far it reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecastRequest {
    /// Origin slot t (last observed sample).
    pub origin: usize,
    /// Look-back length L_win.
    pub window: usize,
    /// Forecast horizon H_pred.
    pub horizon: usize,
    /// Decision delay d.
    pub delay: usize,
}

impl ForecastRequest {
    pub fn new(origin: usize, window: usize, horizon: usize, delay: usize) -> Self {
        Self {
            origin,
            window,
            horizon,
            delay,
        }
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.delay < 1 || self.delay >= self.horizon {
            return Err(Error::InvalidArgument(format!(
                "decision delay {} must satisfy 1 <= d < H_pred = {}",
                self.delay, self.horizon
            )));
        }
        if self.window < 2 {
            return Err(Error::InvalidArgument("look-back window must hold at least two samples".into()));
        }
        if self.origin + 1 < self.window || self.origin >= series_len {
            return Err(Error::Range(format!(
                "window of {} samples ending at slot {} is outside a series of {series_len}",
                self.window, self.origin
            )));
        }
        Ok(())
    }

    fn slice<'a>(&self, series: &'a AttitudeSeries) -> Result<&'a [EulerZYX]> {
        self.validate(series.len())?;
        Ok(&series.samples()[self.origin + 1 - self.window..=self.origin])
    }

    /// Horizons whose forecasts can program a beam, `d+1..=H_pred`.
    pub fn target_horizons(&self) -> std::ops::RangeInclusive<usize> {
        self.delay + 1..=self.horizon
    }
}

/// `H_pred` attitudes forecast from one origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastOutput {
    pub origin: usize,
    /// `horizons[h-1]` is the forecast for slot `origin + h`.
    pub horizons: Vec<EulerZYX>,
    pub tag: String,
    /// Set when the forecaster had to fall back to a simpler model.
    pub fallback: bool,
}

impl ForecastOutput {
    pub fn at(&self, h: usize) -> Option<EulerZYX> {
        h.checked_sub(1).and_then(|i| self.horizons.get(i).copied())
    }
}

/// Common interface of all attitude forecasters.
pub trait Forecaster: Send + Sync {
    fn tag(&self) -> String;
    fn forecast(&self, req: &ForecastRequest, series: &AttitudeSeries) -> Result<ForecastOutput>;
}

/// Holds the last observed attitude.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

/// Per-channel least-squares slope, extrapolated from the last sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearTrend;

/// Per-channel AR(p) on the demeaned window; yaw as a sine/cosine pair.
#[derive(Debug, Clone, Copy)]
pub struct Autoregressive {
    pub order: usize,
}

impl Default for Autoregressive {
    fn default() -> Self {
        Self { order: 8 }
    }
}

/// Replays forecasts produced elsewhere, keyed by origin slot.
#[derive(Debug, Clone, Default)]
pub struct Replay {
    pub outputs: BTreeMap<usize, ForecastOutput>,
}

impl Forecaster for Persistence {
    fn tag(&self) -> String {
        "persistence".into()
    }

    fn forecast(&self, req: &ForecastRequest, series: &AttitudeSeries) -> Result<ForecastOutput> {
        forecast_persistence(req, series)
    }
}

impl Forecaster for LinearTrend {
    fn tag(&self) -> String {
        "linear".into()
    }

    fn forecast(&self, req: &ForecastRequest, series: &AttitudeSeries) -> Result<ForecastOutput> {
        forecast_linear_trend(req, series)
    }
}

impl Forecaster for Autoregressive {
    fn tag(&self) -> String {
        format!("ar{}", self.order)
    }

    fn forecast(&self, req: &ForecastRequest, series: &AttitudeSeries) -> Result<ForecastOutput> {
        forecast_ar(req, series, self.order)
    }
}

impl Forecaster for Replay {
    fn tag(&self) -> String {
        "external".into()
    }

    fn forecast(&self, req: &ForecastRequest, _series: &AttitudeSeries) -> Result<ForecastOutput> {
        let out = self
            .outputs
            .get(&req.origin)
            .ok_or_else(|| Error::Range(format!("no external forecast for origin slot {}", req.origin)))?;
        if out.horizons.len() < req.horizon {
            return Err(Error::Range(format!(
                "external forecast at origin {} has {} horizons, {} required",
                req.origin,
                out.horizons.len(),
                req.horizon
            )));
        }
        Ok(out.clone())
    }
}

pub fn forecast_persistence(req: &ForecastRequest, series: &AttitudeSeries) -> Result<ForecastOutput> {
    let window = req.slice(series)?;
    let last = *window.last().expect("window is non-empty");
    Ok(ForecastOutput {
        origin: req.origin,
        horizons: vec![last; req.horizon],
        tag: "persistence".into(),
        fallback: false,
    })
}

/// Removes 2π jumps between consecutive wrapped angles.
pub fn unwrap_angles(wrapped: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for a in wrapped {
        match out.last() {
            None => out.push(a),
            Some(&prev) => out.push(prev + wrap_pi(a - prev)),
        }
    }
    out
}

/// Least-squares slope of `x` against its sample index.
pub fn least_squares_slope(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let l_bar = (n - 1.0) / 2.0;
    let x_bar = x.iter().sum::<f64>() / n;
    let (num, den) = x.iter().enumerate().fold((0.0, 0.0), |(num, den), (l, v)| {
        let dl = l as f64 - l_bar;
        (num + dl * (v - x_bar), den + dl * dl)
    });
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn channels(window: &[EulerZYX]) -> [Vec<f64>; 3] {
    [
        unwrap_angles(window.iter().map(|s| s.yaw)),
        window.iter().map(|s| s.pitch).collect(),
        window.iter().map(|s| s.roll).collect(),
    ]
}

pub fn forecast_linear_trend(req: &ForecastRequest, series: &AttitudeSeries) -> Result<ForecastOutput> {
    let window = req.slice(series)?;
    let chans = channels(window);
    let slopes: Vec<f64> = chans.iter().map(|c| least_squares_slope(c)).collect();
    let last: Vec<f64> = chans.iter().map(|c| *c.last().expect("non-empty")).collect();
    let horizons = (1..=req.horizon)
        .map(|h| {
            let v = |i: usize| last[i] + slopes[i] * h as f64;
            EulerZYX::new(wrap_pi(v(0)), v(1), v(2))
        })
        .collect();
    Ok(ForecastOutput {
        origin: req.origin,
        horizons,
        tag: "linear".into(),
        fallback: false,
    })
}

/// Fits AR(p) by ridge-stabilized least squares on the demeaned window and
/// iterates it `steps` times. `None` when the normal equations are singular.
fn ar_channel_forecast(x: &[f64], order: usize, steps: usize) -> Option<Vec<f64>> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let rows = n - order;
    let design = DMatrix::from_fn(rows, order, |r, c| y[order + r - 1 - c]);
    let target = DVector::from_fn(rows, |r, _| y[order + r]);
    let mut normal = design.transpose() * &design;
    let trace = normal.trace();
    if trace == 0.0 {
        return Some(vec![mean; steps]);
    }
    if !trace.is_finite() {
        return None;
    }
    let ridge = 1e-10 * trace / order as f64;
    for i in 0..order {
        normal[(i, i)] += ridge;
    }
    let coeffs = normal.cholesky()?.solve(&(design.transpose() * target));
    let mut history: Vec<f64> = y[n - order..].to_vec();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let next: f64 = (0..order).map(|i| coeffs[i] * history[history.len() - 1 - i]).sum();
        history.push(next);
        out.push(mean + next);
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}

pub fn forecast_ar(req: &ForecastRequest, series: &AttitudeSeries, order: usize) -> Result<ForecastOutput> {
    if order == 0 {
        return Err(Error::InvalidArgument("AR order must be positive".into()));
    }
    if req.window < 4 * order {
        return Err(Error::InvalidArgument(format!(
            "AR({order}) needs a window of at least {} samples, got {}",
            4 * order,
            req.window
        )));
    }
    let window = req.slice(series)?;
    let sin: Vec<f64> = window.iter().map(|s| s.yaw.sin()).collect();
    let cos: Vec<f64> = window.iter().map(|s| s.yaw.cos()).collect();
    let pitch: Vec<f64> = window.iter().map(|s| s.pitch).collect();
    let roll: Vec<f64> = window.iter().map(|s| s.roll).collect();
    let fits = [&sin, &cos, &pitch, &roll].map(|c| ar_channel_forecast(c, order, req.horizon));
    let [Some(s), Some(c), Some(p), Some(r)] = fits else {
        let mut out = forecast_linear_trend(req, series)?;
        out.tag = format!("ar{order}");
        out.fallback = true;
        return Ok(out);
    };
    let horizons = (0..req.horizon)
        .map(|i| {
            let norm = s[i].hypot(c[i]);
            let yaw = if norm > 0.0 { (s[i] / norm).atan2(c[i] / norm) } else { 0.0 };
            EulerZYX::new(wrap_pi(yaw), p[i], r[i])
        })
        .collect();
    Ok(ForecastOutput {
        origin: req.origin,
        horizons,
        tag: format!("ar{order}"),
        fallback: false,
    })
}

/// Reads the forecast CSV (`origin_slot,horizon,yaw_deg,pitch_deg,roll_deg`).
pub fn load_external_forecasts(path: impl AsRef<Path>) -> Result<BTreeMap<usize, ForecastOutput>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_forecasts(file)
}

pub fn read_forecasts(reader: impl Read) -> Result<BTreeMap<usize, ForecastOutput>> {
    let rows = read_numeric_csv(reader, &["origin_slot", "horizon", "yaw_deg", "pitch_deg", "roll_deg"])?;
    let mut out: BTreeMap<usize, ForecastOutput> = BTreeMap::new();
    let as_index = |line: usize, col: &str, v: f64| -> Result<usize> {
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::parse(line, col, format!("`{v}` is not a non-negative integer")));
        }
        Ok(v as usize)
    };
    for (line, v) in &rows {
        let origin = as_index(*line, "origin_slot", v[0])?;
        let h = as_index(*line, "horizon", v[1])?;
        let entry = out.entry(origin).or_insert_with(|| ForecastOutput {
            origin,
            horizons: Vec::new(),
            tag: "external".into(),
            fallback: false,
        });
        if h != entry.horizons.len() + 1 {
            return Err(Error::parse(
                *line,
                "horizon",
                format!("expected horizon {} for origin {origin}, found {h}", entry.horizons.len() + 1),
            ));
        }
        let yaw = v[2].to_radians();
        entry.horizons.push(EulerZYX::new(wrap_pi(yaw), v[3].to_radians(), v[4].to_radians()));
    }
    let mut expected = None;
    for (line, v) in &rows {
        let origin = v[0] as usize;
        let len = out[&origin].horizons.len();
        match expected {
            None => expected = Some(len),
            Some(n) if n != len => {
                return Err(Error::parse(
                    *line,
                    "horizon",
                    format!("origin {origin} has {len} horizons, others have {n}"),
                ))
            }
            _ => {}
        }
    }
    Ok(out)
}

pub fn write_forecasts<'a>(path: impl AsRef<Path>, outputs: impl IntoIterator<Item = &'a ForecastOutput>) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_forecasts_to(&mut file, outputs).map_err(|e| Error::io(path, e))
}

pub fn write_forecasts_to<'a>(w: &mut impl Write, outputs: impl IntoIterator<Item = &'a ForecastOutput>) -> std::io::Result<()> {
    writeln!(w, "origin_slot,horizon,yaw_deg,pitch_deg,roll_deg")?;
    for out in outputs {
        for (i, a) in out.horizons.iter().enumerate() {
            writeln!(
                w,
                "{},{},{:?},{:?},{:?}",
                out.origin,
                i + 1,
                to_degrees_exact(a.yaw),
                to_degrees_exact(a.pitch),
                to_degrees_exact(a.roll)
            )?;
        }
    }
    Ok(())
}

/// Per-axis (yaw, pitch, roll) error summary in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisErrors {
    pub mae_deg: [f64; 3],
    pub rmse_deg: [f64; 3],
    pub p95_abs_deg: [f64; 3],
    pub p99_abs_deg: [f64; 3],
    pub samples: usize,
}

impl AxisErrors {
    fn from_errors(errs: &[[f64; 3]]) -> Self {
        let n = errs.len();
        if n == 0 {
            return Self::default();
        }
        let mut out = Self {
            samples: n,
            ..Self::default()
        };
        for axis in 0..3 {
            let mut abs: Vec<f64> = errs.iter().map(|e| e[axis].abs()).collect();
            out.mae_deg[axis] = abs.iter().sum::<f64>() / n as f64;
            out.rmse_deg[axis] = (abs.iter().map(|a| a * a).sum::<f64>() / n as f64).sqrt();
            abs.sort_by(f64::total_cmp);
            out.p95_abs_deg[axis] = nearest_rank(&abs, 0.95);
            out.p99_abs_deg[axis] = nearest_rank(&abs, 0.99);
        }
        out
    }
}

/// Nearest-rank percentile of sorted data.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastErrorReport {
    pub origins: usize,
    pub delay: usize,
    pub horizon: usize,
    /// Errors over the target window `h ∈ {d+1..H_pred}`.
    pub target_window: AxisErrors,
    /// Errors over all horizons `1..=H_pred`.
    pub full_horizon: AxisErrors,
    /// Per-axis MAE for each horizon `h = 1..=H_pred`.
    pub per_horizon_mae_deg: Vec<[f64; 3]>,
}

/// Signed forecast error in degrees, yaw and roll wrapped to (−180°, 180°].
pub fn attitude_error_deg(forecast: EulerZYX, truth: EulerZYX) -> [f64; 3] {
    [
        wrap_pi(forecast.yaw - truth.yaw).to_degrees(),
        (forecast.pitch - truth.pitch).to_degrees(),
        wrap_pi(forecast.roll - truth.roll).to_degrees(),
    ]
}

pub fn forecast_errors<'a>(
    truth: &AttitudeSeries,
    outputs: impl IntoIterator<Item = &'a ForecastOutput>,
    delay: usize,
    horizon: usize,
) -> Result<ForecastErrorReport> {
    if delay < 1 || delay >= horizon {
        return Err(Error::InvalidArgument(format!(
            "decision delay {delay} must satisfy 1 <= d < H_pred = {horizon}"
        )));
    }
    let mut target = Vec::new();
    let mut full = Vec::new();
    let mut per_h = vec![Vec::new(); horizon];
    let mut origins = 0;
    for out in outputs {
        origins += 1;
        if out.horizons.len() < horizon {
            return Err(Error::Range(format!(
                "forecast at origin {} has {} horizons, {horizon} required",
                out.origin,
                out.horizons.len()
            )));
        }
        for h in 1..=horizon {
            let t = truth.get(out.origin + h).ok_or_else(|| {
                Error::Range(format!("truth does not cover slot {} (origin {}, h = {h})", out.origin + h, out.origin))
            })?;
            let e = attitude_error_deg(out.horizons[h - 1], t);
            full.push(e);
            per_h[h - 1].push(e);
            if h > delay {
                target.push(e);
            }
        }
    }
    if origins == 0 {
        return Err(Error::InsufficientData("no forecasts to evaluate".into()));
    }
    Ok(ForecastErrorReport {
        origins,
        delay,
        horizon,
        target_window: AxisErrors::from_errors(&target),
        full_horizon: AxisErrors::from_errors(&full),
        per_horizon_mae_deg: per_h.iter().map(|e| AxisErrors::from_errors(e).mae_deg).collect(),
    })
}
