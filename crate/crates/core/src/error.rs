use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid JSON")]
    Syntax(#[source] serde_json::Error),

    #[error("line {line}: malformed row {content:?}")]
    MalformedRow { line: usize, content: String },

    #[error("line {line}: non-finite sample value {content:?}")]
    NonFiniteSample { line: usize, content: String },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("no samples")]
    NoSamples,

    #[error("sampling rate missing from header and no override given")]
    MissingSampleRate,

    #[error("invalid sampling rate {0} Hz")]
    InvalidSampleRate(f64),

    #[error("{list} indices not ascending at position {position} ({previous} then {current})")]
    NotAscending {
        list: &'static str,
        position: usize,
        previous: i64,
        current: i64,
    },

    #[error("{list} contains negative index {value} at position {position}")]
    NegativeIndex {
        list: &'static str,
        position: usize,
        value: i64,
    },

    #[error("{list} index {index} outside recording of {len} samples")]
    IndexOutOfRange {
        list: &'static str,
        index: usize,
        len: usize,
    },

    #[error("beat count mismatch: {left} vs {right}")]
    BeatCountMismatch { left: usize, right: usize },

    #[error("invalid filter specification: {0}")]
    InvalidFilter(String),

    #[error("input too short: {len} samples, need more than {min}")]
    InputTooShort { len: usize, min: usize },

    #[error("non-finite input sample at index {0}")]
    NonFiniteInput(usize),

    #[error(
        "recording of {len} samples is shorter than one C-point distance window ({window} samples)"
    )]
    RecordingTooShort { len: usize, window: usize },

    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid synthesis specification: {0}")]
    InvalidSynthSpec(String),

    #[error("{0} is undefined: zero denominator")]
    UndefinedMetric(&'static str),

    #[error("cannot aggregate an empty set of recordings")]
    EmptyAggregate,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
