use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid config: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] dominion::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 when a mathematical check could not be carried through, 1 for bad
    /// input.
    pub fn exit_code(&self) -> u8 {
        use dominion::Error as E;
        match self {
            CliError::Core(
                E::InfeasibleAtFloor { .. }
                | E::NoConvergence { .. }
                | E::NonFinite { .. }
                | E::SamplingExhausted { .. }
                | E::NewtonFailure(_)
                | E::SingularD { .. }
                | E::SingularDz,
            ) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
