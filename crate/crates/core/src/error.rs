//! Shared error type for all numeric modules.

/// Errors produced by dataset validation, model fitting, and evaluation.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: String,
        found: String,
    },

    #[error("non-finite value in {field} at row {row}, column {col}")]
    NonFinite {
        field: String,
        row: usize,
        col: usize,
    },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("degenerate responses: {0}")]
    DegenerateResponses(String),

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("internal node {node} has no height")]
    MissingHeight { node: usize },

    #[error("node {node} has no weight; call compute_weights first")]
    MissingWeight { node: usize },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("degenerate truth: {0}")]
    DegenerateTruth(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(what: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
