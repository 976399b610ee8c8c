use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("case {case} failed")]
    Case {
        case: String,
        #[source]
        source: vardiff_core::Error,
    },

    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }

    pub fn case(case: impl Into<String>) -> impl FnOnce(vardiff_core::Error) -> Self {
        let case = case.into();
        move |source| CliError::Case { case, source }
    }
}
