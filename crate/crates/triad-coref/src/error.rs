use std::path::PathBuf;

use triad_coref_core::Error as CoreError;

pub type AppResult<T> = Result<T, AppError>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{message}")]
    Usage { message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Format(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("training: {0}")]
    Training(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for usage errors, 2 for data and format problems, 3 for model errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage { .. } => 1,
            AppError::Io { .. }
            | AppError::Parse { .. }
            | AppError::Format(_)
            | AppError::Config(_)
            | AppError::Checkpoint(_) => 2,
            AppError::Training(_) => 3,
            AppError::Core(e) => match e {
                CoreError::Input(_) | CoreError::Config(_) => 2,
                CoreError::Shape(_) | CoreError::Model(_) | CoreError::AffinityRange { .. } | CoreError::EmptyMatrix => 3,
            },
        }
    }
}
