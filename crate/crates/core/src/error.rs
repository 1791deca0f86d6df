use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("root bracketing failed: {0}")]
    Bracketing(String),
    #[error("daily series is empty")]
    EmptySeries,
    #[error("malformed date {0:?}")]
    MalformedDate(String),
    #[error("dates must be strictly increasing: {prev} then {next}")]
    UnorderedDates { prev: String, next: String },
    #[error("malformed precipitation value {0:?}")]
    MalformedValue(String),
    #[error("series contains no wet days")]
    NoWetDays,
    #[error("need at least two wet periods, got {0}")]
    TooFewPeriods(usize),
    #[error("sample too small: need at least {need}, got {got}")]
    SampleTooSmall { need: usize, got: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("estimator failure: {0}")]
    EstimatorFailure(String),
    #[error("no convergence after {iterations} iterations; log: {log}")]
    NonConvergence { iterations: usize, log: String },
    #[error("index {index} out of range for a sample of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid subset: {0}")]
    InvalidSubset(String),
    #[error("window width {m} exceeds series length {n}")]
    WindowTooWide { m: usize, n: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
