//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulator and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration problem that prevents the operation from starting.
    #[error("configuration error: {0}")]
    Config(String),

    /// Not enough data to compute the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// An argument outside the operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Calibration pass did not cover every scheduled position.
    #[error("calibration incomplete: no first-pass record for positions {0:?}")]
    CalibrationIncomplete(Vec<i32>),

    /// Input is degenerate (singular matrix, zero variance, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A malformed row in a delimiter-separated input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
