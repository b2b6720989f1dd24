use thiserror::Error;

/// Errors raised by the estimator, the models and the harness.
#[derive(Debug, Error)]
pub enum SameError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("eigen-solver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("point {index} has {count} neighbours inside the initial ball, at least {required} are needed")]
    InsufficientNeighbors {
        index: usize,
        count: usize,
        required: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("infeasible noise model: {0}")]
    InfeasibleNoise(String),

    #[error("bump packing infeasible: {0}")]
    PackingInfeasible(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SameError {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        SameError::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SameError>;
