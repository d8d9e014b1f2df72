//! Error type shared by the I/O layer and the CLI commands, carrying the
//! process exit code policy: 1 usage/config/data errors, 2 degenerate
//! results, 3 I/O failures.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments, bad config, or unusable input data.
    #[error("{0}")]
    Usage(String),
    /// Pipeline-level validation failures map to usage errors.
    #[error(transparent)]
    Core(#[from] bgsindy_core::Error),
    /// The run finished but produced a degenerate result.
    #[error("{0}")]
    Degenerate(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(_) => 1,
            CliError::Degenerate(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}
