use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Pitch too close to ±90° for a unique ZYX decomposition.
    #[error("degenerate attitude: |R31| = {r31} is within 1e-9 of 1 (gimbal lock)")]
    DegenerateAttitude { r31: f64 },

    /// Relative rotation of (almost) exactly π; the axis sign is undefined.
    #[error("ambiguous rotation axis at relative angle {angle} rad")]
    AmbiguousAxis { angle: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("slot {0} is not covered by any analog beamformer schedule")]
    UncoveredSlot(usize),

    #[error("detuning ({xi_x}, {xi_y}) lies outside the main lobe")]
    OutOfModel { xi_x: f64, xi_y: f64 },

    #[error("out of range: {0}")]
    Range(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A hard post-condition failed; always a bug.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("snapshot {index}: {source}")]
    Snapshot {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(row: usize, column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            row,
            column: column.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 config, 3 data, 4 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Parse { .. }
            | Error::Io { .. }
            | Error::Range(_)
            | Error::InsufficientData(_)
            | Error::UncoveredSlot(_)
            | Error::DegenerateAttitude { .. }
            | Error::AmbiguousAxis { .. }
            | Error::OutOfModel { .. } => 3,
            Error::Invariant(_) => 4,
            Error::Snapshot { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
