use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("insufficient trials: got {got}, need at least {need}")]
    InsufficientTrials { got: usize, need: usize },
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] benign_core::Error),
}

impl LabError {
    /// Process exit code: 2 for configuration problems, 3 for IO, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use benign_core::Error as E;
        match self {
            LabError::Config(_) | LabError::InsufficientTrials { .. } => 2,
            LabError::Io(_) => 3,
            LabError::Core(E::Io(_)) => 3,
            LabError::Core(
                E::Domain(_)
                | E::DimensionMismatch { .. }
                | E::SizeCap { .. }
                | E::Overflow(_)
                | E::RegimeCondition { .. }
                | E::Unsupported(_)
                | E::Parse(_),
            ) => 2,
            LabError::Core(_) => 1,
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;
