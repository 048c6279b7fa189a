use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A reconstructed covariance violates Cauchy–Schwarz by more than its
    /// propagated uncertainty.
    #[error(
        "inconsistent data at entry ({}, {}): |cov| = {covariance} exceeds sqrt(var1*var2) = {bound} by {margin} (tolerance {tolerance})",
        entry.0, entry.1
    )]
    InconsistentData {
        entry: (usize, usize),
        covariance: f64,
        bound: f64,
        margin: f64,
        tolerance: f64,
    },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("input/output: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
