use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("non-binary label {value} at row {row} (expected -1 or +1)")]
    NonBinaryLabel { row: usize, value: f64 },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("empty labeled set")]
    EmptyLabeledSet,

    #[error("pool exhausted")]
    PoolExhausted,

    #[error("index {0} is not in the unlabeled pool")]
    NotUnlabeled(usize),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
