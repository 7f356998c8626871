use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid operand: {0}")]
    InvalidOperand(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("capacity guard: {0}")]
    Capacity(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("division domain error: {0}")]
    Domain(String),

    #[error("unknown {kind}: {name}")]
    Lookup { kind: &'static str, name: String },

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
