use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{0} must be at least 1")]
    ZeroDimension(&'static str),

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("value {value} at position {index} is outside [0, 1]")]
    OutOfUnitRange { index: usize, value: f64 },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("class {class} has {available} samples but {requested} clusters were requested")]
    TooFewSamples {
        class: usize,
        requested: usize,
        available: usize,
    },

    #[error("cannot seed {requested} clusters from {available} samples")]
    TooManyClusters { requested: usize, available: usize },

    #[error("label {label} is outside [0, {classes})")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("class {0} owns no associative-memory column")]
    UnknownClass(usize),

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mapping does not fit: {0}")]
    Mapping(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic number, expected {expected:#010x}, found {actual:#010x}")]
    BadMagic { path: PathBuf, expected: u32, actual: u32 },

    #[error("{path}: truncated, needed {needed} bytes but only {available} remain")]
    Truncated {
        path: PathBuf,
        needed: usize,
        available: usize,
    },

    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("corrupt file: {0}")]
    Format(String),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_sample(self, index: usize) -> Self {
        Error::Sample {
            index,
            source: Box::new(self),
        }
    }

    /// Broad failure class used by front ends to pick exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::BadMagic { .. }
            | Error::Truncated { .. }
            | Error::CountMismatch { .. }
            | Error::Parse { .. }
            | Error::Format(_)
            | Error::Checksum { .. } => ErrorKind::Io,
            Error::NonFinite { .. } | Error::OutOfUnitRange { .. } => ErrorKind::Numeric,
            Error::Sample { source, .. } => source.kind(),
            _ => ErrorKind::Config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Config,
    Numeric,
}
