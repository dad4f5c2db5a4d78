//! The raw input of every test: a covariate matrix and a response vector.

use crate::error::{QrlofError, Result};
use crate::linalg::Matrix;

/// An observed sample: `n` covariate rows of dimension `d` plus `n` responses.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSample {
    covariates: Matrix,
    response: Vec<f64>,
}

impl DataSample {
    pub fn new(covariates: Matrix, response: Vec<f64>) -> Result<Self> {
        if covariates.rows() == 0 || covariates.cols() == 0 {
            return Err(QrlofError::DimensionMismatch(
                "sample needs at least one observation and one covariate".into(),
            ));
        }
        if covariates.rows() != response.len() {
            return Err(QrlofError::DimensionMismatch(format!(
                "{} covariate rows but {} responses",
                covariates.rows(),
                response.len()
            )));
        }
        if !covariates.is_finite() || !response.iter().all(|v| v.is_finite()) {
            return Err(QrlofError::NonFiniteInput);
        }
        Ok(DataSample {
            covariates,
            response,
        })
    }

    pub fn n(&self) -> usize {
        self.covariates.rows()
    }

    /// Covariate dimension d.
    pub fn dim(&self) -> usize {
        self.covariates.cols()
    }

    pub fn covariates(&self) -> &Matrix {
        &self.covariates
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }
}

/// Design matrix for a linear fit: the selected covariates, optionally
/// prefixed by a constant column.
pub(crate) fn build_design(covariates: &Matrix, with_intercept: bool) -> Matrix {
    let n = covariates.rows();
    let d = covariates.cols();
    if with_intercept {
        Matrix::from_fn(n, d + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                covariates.get(i, j - 1)
            }
        })
    } else {
        covariates.clone()
    }
}
