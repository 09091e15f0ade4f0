use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("vertex index {index} out of range for graph with {len} vertices")]
    Index { index: usize, len: usize },

    #[error("alignment error for pair ({left}, {right}): {reason}")]
    Alignment {
        left: String,
        right: String,
        reason: String,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    Convergence { iterations: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("assignment does not cover element {0}")]
    Coverage(usize),

    #[error("{0}")]
    Domain(String),

    #[error("no centrality score for label `{0}`")]
    Scoring(String),

    #[error("base graph has {available} vertices, sampling needs {required}")]
    Capacity { required: usize, available: usize },

    #[error("unknown element `{0}`")]
    Lookup(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
