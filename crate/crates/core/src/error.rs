use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid eigen-index {0}: indices start at 1")]
    InvalidIndex(usize),

    #[error("point {x} lies outside the open interval (0, {length})")]
    OutsideDomain { x: f64, length: f64 },

    #[error("invalid domain length {0}")]
    InvalidDomain(f64),

    #[error("truncation order {requested} exceeds the maximum {max}")]
    TruncationTooLarge { requested: usize, max: usize },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("offset {theta} is outside the history window [-{window}, 0]")]
    OutOfWindow { theta: f64, window: f64 },

    #[error("history windows differ: {left} vs {right}")]
    WindowMismatch { left: f64, right: f64 },

    #[error("quadrature grid under-resolved: {0}")]
    Resolution(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("misaligned time grid: {0}")]
    Misaligned(String),

    #[error("non-finite or exploding coefficient at t = {t} (mode {mode}, value {value})")]
    Overflow { t: f64, mode: usize, value: f64 },

    #[error("horizon {horizon} too short; at least {required} is needed")]
    HorizonTooShort { horizon: f64, required: f64 },

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
