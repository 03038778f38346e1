use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("duration must be non-negative, got {0}")]
    NegativeDuration(f64),

    #[error("control tick {dt} s must be positive and shorter than the step duration {step_duration} s")]
    TickTooLong { dt: f64, step_duration: f64 },

    #[error("step duration {step_duration} s is not an integer multiple of the tick {dt} s")]
    TickMismatch { dt: f64, step_duration: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("point ({x}, {y}) lies outside the heightmap")]
    OutOfBounds { x: f64, y: f64 },

    #[error("no steppable ground within {budget} m of ({x}, {y})")]
    NoSteppableGround { x: f64, y: f64, budget: f64 },

    #[error("invalid heightmap: {0}")]
    InvalidHeightmap(String),

    #[error("invalid terrain spec: {0}")]
    InvalidTerrain(String),

    #[error("{0}")]
    Io(String),

    /// The reader of our output went away.
    #[error("output closed")]
    BrokenPipe,

    #[error("malformed input: {0}")]
    Format(String),

    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        match e.kind() {
            std::io::ErrorKind::BrokenPipe => Error::BrokenPipe,
            _ => Error::Io(e.to_string()),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe => Error::BrokenPipe,
            csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
            _ => Error::Format(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe) {
            return Error::BrokenPipe;
        }
        match e.classify() {
            serde_json::error::Category::Io => Error::Io(e.to_string()),
            _ => Error::Format(e.to_string()),
        }
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}
