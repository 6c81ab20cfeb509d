use thiserror::Error;

/// Errors raised by the metric computations and the oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("observation {index}: {reason}")]
    InvalidObservation { index: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite argument to {function}: {value}")]
    NonFinite { function: &'static str, value: f64 },

    #[error("negative variance {value} (scale {scale})")]
    NegativeVariance { value: f64, scale: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("quadrature did not reach tolerance {tolerance:e} within depth {max_depth}; achieved error bound {achieved:e}")]
    QuadratureDiverged {
        tolerance: f64,
        max_depth: u32,
        achieved: f64,
    },

    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
