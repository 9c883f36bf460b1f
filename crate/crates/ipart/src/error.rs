use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("exact enumeration requested for m = {m}, above the cap of {cap}")]
    CapExceeded { m: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        Error::Csv {
            line,
            message: e.to_string(),
        }
    }
}

impl Error {
    /// Process exit code convention: 2 for validation problems the user can
    /// fix (bad config, bad data, out-of-range parameters), 3 for runtime
    /// failures (I/O, serialization, numeric breakdown).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::EmptyInput(_)
            | Error::DimensionMismatch { .. }
            | Error::CapExceeded { .. }
            | Error::InvalidParameter(_)
            | Error::Config(_)
            | Error::Csv { .. } => 2,
            Error::Io(_) | Error::Json(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
