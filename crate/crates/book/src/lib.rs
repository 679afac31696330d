//! Compiles and runs every listing in the guide under `book/src` as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/attitude.md")]
pub mod attitude {}
#[doc = include_str!("../../../book/src/pointing.md")]
pub mod pointing {}
#[doc = include_str!("../../../book/src/channel.md")]
pub mod channel {}
#[doc = include_str!("../../../book/src/forecasting.md")]
pub mod forecasting {}
#[doc = include_str!("../../../book/src/calibration.md")]
pub mod calibration {}
#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
