use thiserror::Error;

/// Errors raised across the simulator and the key-rate analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {dim} exceeds the exact-simulation cap of {cap} amplitudes")]
    Capacity { dim: usize, cap: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("no data: {0}")]
    NoData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
