use std::fmt;
use std::io;

/// Command failure, tagged with the stage that produced it. The variant
/// decides the process exit code.
#[derive(Debug)]
pub enum AppError {
    /// Bad flags or configuration.
    Usage(String),
    /// Unreadable or invalid input data.
    Data(String),
    /// A required artifact (model, window container) is missing.
    MissingArtifact(String),
    /// A broken internal invariant.
    Internal(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Data(_) => 2,
            AppError::MissingArtifact(_) => 3,
            AppError::Internal(_) => 4,
        }
    }

    pub fn usage(stage: &str, e: impl fmt::Display) -> Self {
        AppError::Usage(format!("{stage}: {e}"))
    }

    pub fn data(stage: &str, e: impl fmt::Display) -> Self {
        AppError::Data(format!("{stage}: {e}"))
    }

    pub fn internal(stage: &str, e: impl fmt::Display) -> Self {
        AppError::Internal(format!("{stage}: {e}"))
    }

    /// A missing file becomes `MissingArtifact`; other IO failures are data
    /// errors.
    pub fn io(stage: &str, path: &std::path::Path, e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::NotFound {
            AppError::MissingArtifact(format!("{stage}: {} not found", path.display()))
        } else {
            AppError::Data(format!("{stage}: {}: {e}", path.display()))
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Usage(m) | AppError::Data(m) | AppError::MissingArtifact(m) | AppError::Internal(m) => {
                f.write_str(m)
            }
        }
    }
}

impl std::error::Error for AppError {}

pub type Result<T> = std::result::Result<T, AppError>;
