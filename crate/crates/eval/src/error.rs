use thiserror::Error;

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Core(#[from] reenact_core::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("class `{class}` has {available} {pool} videos, {needed} needed")]
    InsufficientPool {
        pool: &'static str,
        class: String,
        needed: usize,
        available: usize,
    },

    #[error("train/test leak: {0}")]
    SplitLeak(String),

    #[error("failed to write {path}: {message}")]
    Write { path: String, message: String },
}

impl EvalError {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        EvalError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn is_input_error(&self) -> bool {
        match self {
            EvalError::Core(e) => e.is_input_error(),
            EvalError::Write { .. } => false,
            _ => true,
        }
    }
}
