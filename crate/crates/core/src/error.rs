use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MediationError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("schema error: missing column `{column}` in {path}")]
    MissingColumn { column: String, path: PathBuf },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: cannot read {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("collinear design: column `{column}` is linearly dependent on {previous:?}")]
    Collinear {
        column: String,
        previous: Vec<String>,
    },

    #[error("insufficient rows: {rows} complete cases for a regression with {cols} columns")]
    InsufficientRows { rows: usize, cols: usize },

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("LAD solver did not converge after {iterations} iterations (last coefficient change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("boundary undefined: {0}")]
    BoundaryUndefined(String),

    #[error("contribution undefined: {0}")]
    UndefinedContribution(String),

    #[error("no witness found: {0}")]
    WitnessNotFound(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MediationError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(MediationError::Domain(msg.into()))
}
