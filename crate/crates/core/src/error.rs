use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("quadrature failure on panels ({m}, {n}): {msg}")]
    Quadrature { m: usize, n: usize, msg: String },

    #[error("ill-conditioned system (condition estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("missing data: {0}")]
    Missing(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
