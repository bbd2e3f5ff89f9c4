use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("stability index {0} outside (1, 2)")]
    AlphaOutOfRange(f64),
    #[error("invalid shift function: {0}")]
    InvalidShift(String),
    #[error("time {0} outside [0, 1]")]
    TimeOutOfRange(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("tilt is not admissible: sup amplitude {amplitude} >= 1")]
    InvalidTilt { amplitude: f64 },
    #[error("path has no jump record (increment mode)")]
    MissingJumpRecord,
    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("records are not ordered by time")]
    Unordered,
    #[error("not enough resolvable points: {0}")]
    InsufficientData(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
