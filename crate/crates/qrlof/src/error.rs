//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QrlofError {
    #[error("tau must lie strictly between 0 and 1 (got {0})")]
    InvalidTau(f64),
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("under-determined fit: {n} observations for {q} parameters")]
    UnderDetermined { n: usize, q: usize },
    #[error("simplex solver made no progress after {iterations} iterations")]
    SolverStalled { iterations: usize },
    #[error("simplex solver failed: {0}")]
    SolverFailure(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid model specification: {0}")]
    InvalidModel(String),
    #[error("column '{0}' not found in CSV header")]
    MissingColumn(String),
    #[error("row {row}, column '{column}': {reason}")]
    InvalidCell {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("dataset contains no data rows")]
    EmptyDataset,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QrlofError>;

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(QrlofError::InvalidTau(tau));
    }
    Ok(())
}
