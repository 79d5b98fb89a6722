use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite real")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("dataset must contain at least one row and one feature")]
    EmptyData,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parameter vector has length {found}, expected {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("region contains no samples")]
    EmptyRegion,
    #[error("bootstrap gave up after {attempts} attempts with empty in-region resamples")]
    BootstrapExhausted { attempts: usize },
    #[error("optimizer found no structurally valid region")]
    NoValidRegion,
    #[error("every held-out fold is empty for gamma = {gamma}")]
    AllFoldsEmpty { gamma: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
