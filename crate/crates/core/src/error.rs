use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("child class counts do not sum to the parent counts")]
    ChildCountsMismatch,

    #[error("all importance scores are zero; the guide forest is degenerate (try increasing the number of trees)")]
    AllZeroImportance,

    #[error("gamma {0} is outside [0, 1]")]
    GammaOutOfRange(f64),

    #[error("mtry {mtry} exceeds the number of features {n_features}")]
    MtryExceedsFeatures { mtry: usize, n_features: usize },

    #[error("expected {expected} features, got {got}")]
    FeatureCountMismatch { expected: usize, got: usize },

    #[error("{0} mode requires per-feature weights")]
    MissingWeights(&'static str),

    #[error("feature selection returned no features")]
    EmptySelection,

    #[error("expected {expected} weights, got {got}")]
    LambdaLengthMismatch { expected: usize, got: usize },

    #[error("weight {value} for feature {index} is outside [0, 1]")]
    LambdaOutOfRange { index: usize, value: f64 },

    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    EmptyInput,

    #[error("class {class:?} has {count} rows; at least 2 are required to split")]
    ClassTooSmall { class: String, count: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("missing value at row {row}, column {column}")]
    MissingValue { row: usize, column: usize },

    #[error("dataset has a single class; at least two are required")]
    SingleClass,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
