use std::path::PathBuf;

/// Errors produced by the solver library and the benchmark harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate cost matrix: no strictly positive entry")]
    DegenerateCost,

    #[error("invalid problem instance: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bad problem file: {0}")]
    Format(String),

    #[error("truncated problem file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("dense oracle refused: dimension {dim} exceeds cap {cap}")]
    OracleSize { dim: usize, cap: usize },

    #[error("sparse structure error: {0}")]
    Structure(String),

    #[error("matrix is not positive definite (pivot {pivot:e} at column {column})")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    #[error("matrix pattern is not covered by the symbolic factor")]
    PatternMismatch,

    #[error("search direction error: {0}")]
    Direction(String),

    #[error("line search failed: no decrease after {trials} trials")]
    LineSearch { trials: usize },

    #[error("iteration {iter} failed: {source}")]
    Step {
        iter: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("plot error: {0}")]
    Plot(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
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
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
