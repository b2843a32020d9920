use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: line {line}, column {column}, at `{field}`: {message}")]
    Config { path: PathBuf, line: usize, column: usize, field: String, message: String },
    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),
    #[error("{path}: {message}")]
    MalformedArtifact { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] lmpc_core::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::MalformedArtifact { path: path.into(), message: message.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
