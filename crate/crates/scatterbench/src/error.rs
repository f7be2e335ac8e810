use thiserror::Error;

/// Errors shared across the bench, protocol and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("undefined background: every non-target channel is zero after blank subtraction")]
    UndefinedBackground,
    #[error("unknown token id {0}")]
    UnknownToken(usize),
    #[error("trace ledger: {0}")]
    Trace(String),
    #[error("config: {0}")]
    Config(String),
    #[error("missing artifact for {table}: {path}")]
    MissingArtifact { table: String, path: String },
    #[error("malformed fixture {path}: {reason}")]
    MalformedFixture { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
