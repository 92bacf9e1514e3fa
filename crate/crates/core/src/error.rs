use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("Bell outcome ({n},{m}) has zero probability")]
    DegenerateOutcome { n: usize, m: usize },

    #[error("unknown optical mode {0}")]
    ModeResolution(String),

    #[error("unknown circuit stage `{0}`")]
    UnknownStage(String),

    #[error("out of scope: {0}")]
    OutOfScope(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("ill-posed reconstruction: {0}")]
    IllPosed(String),

    #[error("solver failed: {message} (residual {residual:.3e})")]
    Solver { message: String, residual: f64 },

    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    #[error("data quality: {0}")]
    DataQuality(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
