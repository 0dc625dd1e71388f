use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by model evaluation, training and inference.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("invalid ordering: {0}")]
    Ordering(String),

    #[error("invalid mask context: {0}")]
    Context(String),

    #[error("invalid query: {0}")]
    Query(String),

    #[error("head mismatch: operation requires a {expected} head")]
    Head { expected: &'static str },

    #[error("non-finite activation in layer {layer}")]
    NonFiniteActivation { layer: usize },

    #[error("non-finite loss at dimension {dim}")]
    NonFiniteLoss { dim: usize },

    #[error("non-finite function value at coordinate {coord}")]
    NonFiniteProbe { coord: usize },

    #[error("non-finite parameter update in tensor `{tensor}`")]
    NonFiniteUpdate { tensor: String },

    #[error("training diverged at iteration {iteration}: validation score is not finite")]
    Diverged { iteration: usize },

    #[error("example {index}: {source}")]
    Example {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("pretraining depth {depth}: {source}")]
    Pretrain {
        depth: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid training configuration: {0}")]
    TrainConfig(String),

    #[error(transparent)]
    Data(#[from] DataError),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for failures caused by non-finite arithmetic rather than bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NonFiniteActivation { .. }
            | Error::NonFiniteLoss { .. }
            | Error::NonFiniteProbe { .. }
            | Error::NonFiniteUpdate { .. }
            | Error::Diverged { .. } => true,
            Error::Example { source, .. } | Error::Pretrain { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

/// Errors raised while reading, validating or transforming datasets.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("empty input")]
    Empty,

    #[error("row {row}, column {column}: cannot parse `{token}` as a number")]
    Parse {
        row: usize,
        column: usize,
        token: String,
    },

    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: value {value} is not binary")]
    NotBinary { row: usize, column: usize, value: f64 },

    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },

    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid split: {0}")]
    Split(String),

    #[error("image {index} is {width}x{height}, smaller than the {patch}x{patch} patch")]
    ImageTooSmall {
        index: usize,
        width: usize,
        height: usize,
        patch: usize,
    },

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error("operation requires {0} data")]
    Kind(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
