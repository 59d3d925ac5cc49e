use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("design matrix is singular (column {column})")]
    SingularDesign { column: usize },

    #[error("insufficient data: {n} observations for {p} parameters")]
    InsufficientData { n: usize, p: usize },

    #[error("logistic fit separated: {0}")]
    Separation(String),

    #[error("no convergence after {iterations} iterations (score norm {score_norm:e})")]
    Convergence { iterations: usize, score_norm: f64 },

    #[error("cox partial likelihood is monotone: coefficient {index} diverges")]
    Divergence { index: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("mediator {index}: {source}")]
    Mediator {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fits disagree on sample size: {first} vs {other}")]
    HeterogeneousSampleSize { first: usize, other: usize },

    #[error("censoring calibration failed: {0}")]
    Calibration(String),

    #[error("invalid configuration field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("data error at row {row}, column `{column}`: {message}")]
    Data {
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {source}")]
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
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn for_mediator(self, index: usize) -> Self {
        Error::Mediator {
            index,
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through mediator tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Mediator { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerical fitting layer (as opposed to bad
    /// input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::NotPositiveDefinite { .. }
                | Error::SingularDesign { .. }
                | Error::Separation(_)
                | Error::Convergence { .. }
                | Error::Divergence { .. }
                | Error::Degenerate(_)
                | Error::Calibration(_)
        )
    }
}
