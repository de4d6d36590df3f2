//! Error type shared across the library.

use thiserror::Error;

/// Errors surfaced by construction and computation routines.
#[derive(Debug, Error)]
pub enum CoreError {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A transition matrix is not row-stochastic or not ergodic.
    #[error("invalid Markov specification: {0}")]
    InvalidMarkov(String),

    /// A configuration field failed validation.
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    /// The sieve design matrix is numerically rank deficient.
    #[error("collinear basis at kappa = {kappa} (condition number {cond:.3e} > 1e12)")]
    CollinearBasis { kappa: usize, cond: f64 },

    /// A variance needed in a denominator is zero or negative.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    /// The nonlinear basis carries no sample correlation with the regressor.
    #[error("no identifying nonlinearity in basis: {0}")]
    NoIdentifyingNonlinearity(String),

    /// A norm or moment that must be finite is not.
    #[error("norm divergent: {0}")]
    NormDivergent(String),

    /// The operation is not defined for the supplied process kind.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Malformed input data (CSV rows, shapes).
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
