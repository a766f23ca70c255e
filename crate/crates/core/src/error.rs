use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("inconsistent parameters: {0}")]
    InconsistentParams(String),

    #[error("coupling g0 must be positive, got {0}")]
    NonPositiveCoupling(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical abort at tau = {tau}: {reason}")]
    NumericalAbort { tau: f64, reason: String },

    #[error("truncation alarm at tau = {tau}: top-level population {population:.3e} in mode {mode} exceeds {threshold:.1e}")]
    TruncationAlarm {
        tau: f64,
        mode: char,
        population: f64,
        threshold: f64,
    },

    #[error("invariant violated at tau = {tau}: {reason}")]
    InvariantViolation { tau: f64, reason: String },

    #[error("series too short: need a span of {needed} in tau, got {got}")]
    SeriesTooShort { needed: f64, got: f64 },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("fit needs at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("lifetime {0} must exceed 1 for the double-log fit")]
    LifetimeTooShort(f64),

    #[error("degenerate abscissa: all g0 values coincide")]
    DegenerateAbscissa,

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("malformed file: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
