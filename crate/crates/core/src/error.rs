use thiserror::Error;

/// Errors raised while parsing, constructing, loading or checking protocols.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(i64),

    #[error("population of size {0} is too small, at least 2 agents are required")]
    PopulationTooSmall(u64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("value {value} does not fit into {bits} bit positions")]
    Overflow { value: i64, bits: u32 },

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("variable mismatch: {0}")]
    VariableMismatch(String),

    #[error("malformed protocol document: {0}")]
    Document(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
