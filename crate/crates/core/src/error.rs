use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("group mismatch")]
    GroupMismatch,
    #[error("space mismatch")]
    SpaceMismatch,
    #[error("σ undefined at {0}")]
    SigmaUndefined(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
