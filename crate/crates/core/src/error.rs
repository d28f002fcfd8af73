use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty window")]
    EmptyWindow,

    /// The valley structure needed by a construction could not be certified
    /// inside the largest admissible window.
    #[error("landscape undetermined: {0}")]
    LandscapeUndetermined(String),

    #[error("window cap of {cap} sites exceeded before tolerance {tol:e} was met (leak {leak:e})")]
    WindowCapExceeded { cap: usize, tol: f64, leak: f64 },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Scenario(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
