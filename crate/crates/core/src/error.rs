use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MstabError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(u32),
    #[error("unknown simple label {0}")]
    UnknownLabel(u32),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("class listed at step {step} is not simple in the current heart")]
    NotSimpleAtStep { step: usize },
    #[error("invalid stability condition ({reason}) at simples {offending:?}")]
    InvalidStability { offending: Vec<u32>, reason: String },
    #[error("invalid multi-scale stability condition: {0}")]
    InvalidMsc(String),
    #[error("wall hit: {0}")]
    WallHit(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("no admissible rotation: {0}")]
    NoRotation(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, MstabError>;
