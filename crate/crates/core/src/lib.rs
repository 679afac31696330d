//! Attitude-aware hybrid beamforming for high-altitude-platform downlinks.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: ZYX attitudes, SO(3) residuals, LoS → body-frame angles.
//! - [`array`]: UPA steering, analog beamformer schedules, detuning and the
//!   pointing certificate constants.
//! - [`channel`]: Rician channel synthesis, effective channel, SINR/rates.
//! - [`forecast`]: baseline attitude forecasters, forecast replay and error
//!   metrics.
//! - [`calibration`]: offline pointing-error radius and moments.
//! - [`solver`]: per-slot admission and digital beamforming with strict
//!   feasibility repair.
//! - [`harness`]: scenarios, Monte Carlo runs, sweeps and result files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod calibration;
pub mod channel;
pub mod error;
pub mod forecast;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
