//! Shared error type for the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A covariance kernel produced a matrix that is not (numerically)
    /// positive semidefinite.
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    /// A derived quantity fell outside the range required by a criterion
    /// (for example an interpolation exponent outside (0, 2)).
    #[error("condition violated: {0}")]
    ConditionViolated(String),

    /// A least-squares decay fit was requested on data where the fit is
    /// undefined (non-positive values inside the fit window).
    #[error("fit undefined: {0}")]
    FitUndefined(String),

    /// Malformed or out-of-range configuration input.
    #[error("config error: {0}")]
    Config(String),

    /// An internal consistency check failed.
    #[error("internal error: {0}")]
    Internal(String),
}
