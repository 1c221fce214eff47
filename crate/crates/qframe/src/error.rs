use std::fmt;
use std::io;

/// Errors surfaced by the command-line front end, each with an exit code.
#[derive(Debug)]
pub enum AppError {
    /// Bad flags or parameters (exit 2).
    Usage(String),
    /// Request outside the dense-simulation scope (exit 3).
    Scope(String),
    /// A checked bound or invariant failed while its preconditions held (exit 4).
    Verification(String),
    Io(io::Error),
    Internal(String),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Scope(_) => 3,
            AppError::Verification(_) => 4,
            AppError::Io(_) | AppError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Usage(msg) | AppError::Scope(msg) | AppError::Internal(msg) => f.write_str(msg),
            AppError::Verification(msg) => write!(f, "verification failed: {msg}"),
            AppError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<io::Error> for AppError {
    fn from(e: io::Error) -> Self {
        AppError::Io(e)
    }
}

impl From<qframe_core::Error> for AppError {
    fn from(e: qframe_core::Error) -> Self {
        use qframe_core::Error as E;
        match e {
            E::DenseBasisScope { .. } | E::CombinatorialBlowup { .. } => AppError::Scope(e.to_string()),
            E::ZeroIterations
            | E::AngleOutOfRange { .. }
            | E::InvalidSpin
            | E::DimensionMismatch { .. }
            | E::InvalidDensityMatrix(_)
            | E::NotHermitian { .. }
            | E::NotSquare { .. } => AppError::Usage(e.to_string()),
            other => AppError::Internal(other.to_string()),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
