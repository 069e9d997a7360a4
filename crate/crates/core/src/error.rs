use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("encoding format error: {0}")]
    Format(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("statistic `{notion}` is undefined: global denominator vanished")]
    UndefinedStatistic { notion: String },

    #[error("violation is undefined: {0}")]
    UndefinedViolation(String),

    #[error("AUROC is undefined: labels contain a single class")]
    UndefinedAuroc,

    #[error("unsupported sensitive format `{format}` for {method}")]
    UnsupportedFormat { method: String, format: String },

    #[error("infeasible sampling: cell (group `{group}`, label {label}) is empty but must be oversampled")]
    InfeasibleSampling { group: String, label: u8 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("threshold application error: {0}")]
    Apply(String),

    #[error("k inference error: naive violation must be positive, got {0}")]
    InferK(f64),

    #[error("table error: {0}")]
    Table(String),

    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

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

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
