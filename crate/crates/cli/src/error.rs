use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qei_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{failed} of {total} identity checks failed")]
    VerificationFailed { failed: usize, total: usize },
}

impl CliError {
    /// 0 success, 1 verification failure, 2 input/spec error, 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed { .. } => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}
