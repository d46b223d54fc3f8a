use std::path::PathBuf;

use pollsel::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pollsel::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Output(String),

    #[error("audit failed: {0}")]
    AuditFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Budget => 3,
                ErrorClass::Numerical => 4,
            },
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Output(_) => 2,
            CliError::AuditFailed(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
