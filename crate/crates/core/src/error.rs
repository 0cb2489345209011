use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph is disconnected; the minimum spanning tree bound is undefined")]
    Disconnected,

    #[error("encoding capacity exceeded: requested {requested} strings but 3·C({n},{k}) = {capacity}")]
    CapacityExceeded {
        requested: usize,
        n: usize,
        k: usize,
        capacity: usize,
    },

    #[error("{what} is too large: {size} exceeds the limit of {limit}; {hint}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error("post-selection failed after {retries} attempts")]
    PostSelection { retries: usize },

    #[error("non-finite {quantity} at epoch {epoch}")]
    NonFinite { quantity: &'static str, epoch: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
