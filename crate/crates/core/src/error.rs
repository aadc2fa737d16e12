use std::path::PathBuf;

use crate::signal::ClassLabel;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: u64, message: String },

    #[error("{path}:{line}: expected {expected} channels, found {found}")]
    ChannelCountMismatch {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("duplicate subject id `{0}`")]
    DuplicateSubject(String),

    #[error("unknown channel name `{0}`")]
    UnknownChannel(String),

    #[error("duplicate channel name `{0}`")]
    DuplicateChannel(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("no training data for class {0}")]
    MissingClass(ClassLabel),

    #[error("{what} out of range: {value} (valid {min}..={max})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("feature names do not match the fitted selection")]
    NameMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("optimizer did not converge within {iterations} iterations")]
    NonConvergence { iterations: u64 },

    #[error("segment {segment}, channel {channel}: {source}")]
    Extraction {
        segment: usize,
        channel: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("split {split}: {source}")]
    Split {
        split: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::NonConvergence { .. } => ErrorCategory::Numerical,
            Error::InvalidParameter(_) | Error::OutOfRange { .. } => ErrorCategory::Config,
            Error::Extraction { source, .. } | Error::Split { source, .. } => source.category(),
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
