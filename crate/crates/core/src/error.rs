use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: missing or invalid field `{field}`")]
    Schema { line: usize, field: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite sample {0} rejected")]
    NonFinite(f64),

    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("engine aborted: {0}")]
    Aborted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
