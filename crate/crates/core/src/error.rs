use crate::capacity::MuscleGroup;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised while building or running a fatigue simulation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("target ({x:.6}, {z:.6}) m is outside the reachable annulus [{min_reach:.6}, {max_reach:.6}] m")]
    UnreachableTarget {
        x: f64,
        z: f64,
        min_reach: f64,
        max_reach: f64,
    },

    #[error("trajectory passes within the singular tolerance of full extension at t = {t:.6} s")]
    SingularTrajectory { t: f64 },

    #[error("time {t} s is outside [0, {duration}] s")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("time {t} s precedes the work start {start} s")]
    NegativeTime { t: f64, start: f64 },

    #[error("anthropometry out of range: {0}")]
    OutOfRangeAnthropometry(String),

    #[error("capacity of {group} is non-positive ({value:.6} N·m) at t = {t:.6} s")]
    ZeroCapacity { group: MuscleGroup, value: f64, t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed scenario text: {0}")]
    Parse(String),

    #[error("scenario schema violation: {0}")]
    Schema(String),

    #[error("invalid value at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the input document rather than by the run.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Schema(_) | Error::Validation { .. }
        )
    }
}
