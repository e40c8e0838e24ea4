use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column `{column}`: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label column must hold exactly two distinct values, found {found}: {values:?}")]
    LabelCardinality { found: usize, values: Vec<String> },

    #[error("label {label:?} is not one of the model's classes {known:?}")]
    UnknownLabel { label: String, known: [String; 2] },

    #[error("class {class} has {count} samples, at least {required} required")]
    ClassSize {
        class: u8,
        count: usize,
        required: usize,
    },

    #[error("dataset needs at least {required} features, found {found}")]
    TooFewFeatures { found: usize, required: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("input is missing model features: {0:?}")]
    MissingFeatures(Vec<String>),

    #[error("active feature set is empty")]
    EmptyFeatureSet,

    #[error("feature index {index} out of range for {p} features")]
    FeatureOutOfRange { index: usize, p: usize },

    #[error("sample {index}: no neighbor satisfies the class constraint")]
    NoNeighbor { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training failed: no pivot produced more than one kept feature (largest kept set: {max_kept})")]
    NoCandidate { max_kept: usize },

    #[error("oracle search too large: {0}")]
    OracleGuard(String),

    #[error("malformed model: {0}")]
    Model(String),

    #[error("json error: {0}")]
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
