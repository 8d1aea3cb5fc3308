use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("requested size {requested} exceeds the configured cap {cap}")]
    SizeCap { requested: usize, cap: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("regime condition failed for {regime}: {lhs} is not < {rhs}")]
    RegimeCondition {
        regime: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
