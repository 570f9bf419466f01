//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Enumeration or grid allocation would exceed a configured cap.
    #[error("resource limit: {what} needs {requested}, cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    /// Grid resolution too small to represent the requested spectrum.
    #[error("aliasing: axis {axis} has {points} points but needs more than {required} for max frequency {max_freq}")]
    Aliasing {
        axis: usize,
        points: usize,
        required: usize,
        max_freq: i64,
    },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("unknown test function: {0}")]
    UnknownFunction(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
