use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Numeric(sepoc_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Some sweep points failed; the others were written.
    #[error("{failed} of {total} points failed")]
    PartialFailure { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) | CliError::PartialFailure { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<sepoc_core::Error> for CliError {
    fn from(e: sepoc_core::Error) -> Self {
        use sepoc_core::Error as E;
        match e {
            E::InvalidInput(msg) => CliError::Usage(msg),
            E::GraphParse { .. } => CliError::Usage(e.to_string()),
            E::Io(source) => CliError::Io { path: PathBuf::new(), source },
            other => CliError::Numeric(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
