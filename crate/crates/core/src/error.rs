use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or out-of-range input data.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Parameters outside the regime where a formula is defined (gaps, |β| ≥ 1, ...).
    #[error("regime error: {0}")]
    Regime(String),
    #[error("miscibility violation: {0}")]
    Miscibility(String),
    #[error("consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
