//! CSV ingestion for observed datasets.

use crate::data::DataSample;
use crate::error::{QrlofError, Result};
use crate::linalg::Matrix;
use std::path::{Path, PathBuf};

/// Description of a delimited text dataset: which column is the response and
/// which columns, in order, are the covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub response: String,
    pub covariates: Vec<String>,
    pub delimiter: u8,
}

/// Header row of a delimited file, used to resolve default column selections.
pub fn csv_headers(path: &Path, delimiter: u8) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_path(path)?;
    Ok(reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect())
}

/// Loads the declared columns into a [`DataSample`]. Cells must parse as
/// finite numbers; offending cells are reported with their data row (1-based)
/// and column name.
pub fn load_csv(file: &DatasetFile) -> Result<DataSample> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(file.delimiter)
        .from_path(&file.path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let locate = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| QrlofError::MissingColumn(name.to_string()))
    };
    let response_idx = locate(&file.response)?;
    let covariate_idx: Vec<usize> = file
        .covariates
        .iter()
        .map(|name| locate(name))
        .collect::<Result<_>>()?;
    if covariate_idx.is_empty() {
        return Err(QrlofError::InvalidConfig(
            "at least one covariate column is required".into(),
        ));
    }

    let parse_cell = |row: usize, column: &str, raw: &str| -> Result<f64> {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err(QrlofError::InvalidCell {
                row,
                column: column.to_string(),
                reason: "missing value".into(),
            });
        }
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(QrlofError::InvalidCell {
                row,
                column: column.to_string(),
                reason: "non-finite value".into(),
            }),
            Err(_) => Err(QrlofError::InvalidCell {
                row,
                column: column.to_string(),
                reason: format!("cannot parse '{trimmed}' as a number"),
            }),
        }
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut response: Vec<f64> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = idx + 1;
        let cell = |col: usize| record.get(col).unwrap_or("");
        response.push(parse_cell(row_no, &file.response, cell(response_idx))?);
        let covariate_row: Vec<f64> = covariate_idx
            .iter()
            .zip(&file.covariates)
            .map(|(&col, name)| parse_cell(row_no, name, cell(col)))
            .collect::<Result<_>>()?;
        rows.push(covariate_row);
    }
    if rows.is_empty() {
        return Err(QrlofError::EmptyDataset);
    }
    DataSample::new(Matrix::from_rows(rows)?, response)
}
