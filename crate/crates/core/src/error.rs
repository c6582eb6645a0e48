use thiserror::Error;

/// Errors raised by constructors and fallible operations in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid `{name}`: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("derivative order {0} is not supported (only 1 and 2)")]
    UnsupportedOrder(u32),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance is not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),

    #[error("Monte-Carlo estimate failed: {0}")]
    Estimation(String),

    #[error("grid cell {coords:?} failed: {source}")]
    Cell {
        coords: Vec<usize>,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        name,
        reason: reason.into(),
    }
}
