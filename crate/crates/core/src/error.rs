use thiserror::Error;

/// Errors raised by the library.
///
/// Row and column positions in ingestion errors are 1-based: `row` counts
/// data rows after the header, `col` counts fields in the file.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing value at data row {row}, column {col}")]
    MissingValue { row: usize, col: usize },

    #[error("non-numeric value at data row {row}, column {col}")]
    NonNumeric { row: usize, col: usize },

    #[error("only one class present (diseased: {diseased}, non-diseased: {non_diseased})")]
    SingleClass {
        diseased: usize,
        non_diseased: usize,
    },

    #[error("duplicate marker name `{0}`")]
    DuplicateMarkerName(String),

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("need at least {needed} samples per class, found {found}")]
    TooFewPerClass { needed: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite loss encountered during fitting")]
    NonFiniteLoss,

    #[error("infeasible fold layout: {0}")]
    InfeasibleFolds(String),

    #[error("marker columns do not match: {0}")]
    ColumnMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::NonFiniteLoss)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
