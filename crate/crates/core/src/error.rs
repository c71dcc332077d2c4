use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid bounds: hard bound {hard} must be strictly below soft bound {soft}")]
    InvalidBounds { hard: f64, soft: f64 },

    #[error("degenerate reference: shifted reference best is {0}, expected > 0")]
    DegenerateReference(f64),

    #[error("kernel matrix is not positive definite after {0} jitter doublings")]
    IllConditioned(usize),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("iteration stop efficiency is undefined: no good point was observed")]
    UndefinedIse,

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("interaction budget exhausted, the session must be finalized")]
    FinalizationRequired,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
