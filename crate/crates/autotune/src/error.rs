use std::path::PathBuf;

use autotune_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, AppError>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {source}")]
    Json { context: String, source: serde_json::Error },
    #[error("{0}")]
    Ingest(String),
    #[error("unknown job {0}")]
    UnknownJob(String),
    #[error("job {0} has no fine-tune feedback to accept")]
    NoFeedback(String),
    #[error("no scorer model at {0}; train one with `autotune train-shape`")]
    NoModel(PathBuf),
    #[error("{0}")]
    BadRequest(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        AppError::Json { context: context.into(), source }
    }

    /// Machine-readable error code for API and CLI consumers.
    pub fn code(&self) -> &'static str {
        match self {
            AppError::Core(e) => match e {
                CoreError::InvalidBaselines { .. } => "invalid_baselines",
                CoreError::InvalidTarget(_) => "invalid_sensitivity",
                CoreError::ArchitectureMismatch { .. } => "model_mismatch",
                CoreError::Unlabeled(_) => "unlabeled_series",
                CoreError::CorpusTooSmall { .. } => "corpus_too_small",
                CoreError::Diverged { .. } => "training_diverged",
                CoreError::UnknownMethod(_) => "unknown_method",
                _ => "invalid_input",
            },
            AppError::Io { .. } => "io_error",
            AppError::Json { .. } => "invalid_json",
            AppError::Ingest(_) => "invalid_series",
            AppError::UnknownJob(_) => "unknown_job",
            AppError::NoFeedback(_) => "no_feedback",
            AppError::NoModel(_) => "no_model",
            AppError::BadRequest(_) => "bad_request",
        }
    }
}
