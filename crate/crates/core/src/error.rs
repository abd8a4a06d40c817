use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("ambient vectors need at least 2 coordinates, got {0}")]
    TooFewCoordinates(usize),

    #[error("point is not on the hyperboloid: <x,x>_L + 1 = {residual:e}")]
    OffManifold { residual: f64 },

    #[error("point lies outside the open unit ball (norm {norm})")]
    OutsideBall { norm: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("self-loop on `{0}`")]
    SelfLoop(String),

    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("unknown concept `{0}`")]
    UnknownId(String),

    #[error("{count} ids missing from the embedding: {}", .first.join(", "))]
    MissingIds { count: usize, first: Vec<String> },

    #[error("asymmetric score for ({0}, {1})")]
    Asymmetric(String, String),

    #[error("invalid score {score} for ({a}, {b})")]
    InvalidScore { a: String, b: String, score: f64 },

    #[error("entity `{0}` has no annotations")]
    NoAnnotations(String),

    #[error("dataset has no positive pairs")]
    EmptyDataset,

    #[error("correlation undefined for constant input")]
    ConstantInput,

    #[error("{0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that stem from numerics rather than input data.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::OffManifold { .. } | Error::OutsideBall { .. }
        )
    }
}
