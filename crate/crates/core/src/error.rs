use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid weight at index {index}: {value}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("invalid label at index {index}: {value} (expected -1 or +1)")]
    InvalidLabel { index: usize, value: i64 },

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("invalid cost pair ({c_pos}, {c_neg}): both costs must be finite and > 0")]
    InvalidCost { c_pos: f64, c_neg: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("class {label} has {count} samples, fewer than the {required} required")]
    ClassTooSmall {
        label: i8,
        count: usize,
        required: usize,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unknown report kind `{0}`")]
    UnknownReportKind(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    CsvFormat(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
