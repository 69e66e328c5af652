use std::path::PathBuf;

use memhd_core::ErrorKind;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] memhd_core::Error),

    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub const EXIT_IO: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(e) => match e.kind() {
                ErrorKind::Io => EXIT_IO,
                ErrorKind::Config => EXIT_CONFIG,
                ErrorKind::Numeric => EXIT_NUMERIC,
            },
            Self::Config(_) => EXIT_CONFIG,
            Self::Io { .. } => EXIT_IO,
        }
    }
}
