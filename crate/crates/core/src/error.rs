//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the analytic, inversion and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The series argument is larger than the configured summation cap.
    #[error("|z| = {modulus} exceeds the series domain cap {cap}")]
    DomainCapExceeded { modulus: f64, cap: f64 },

    /// A series or iterative scheme hit its iteration budget.
    #[error("no convergence after {iterations} iterations: {what}")]
    NonConvergence { what: &'static str, iterations: usize },

    /// A result is not representable in double precision.
    #[error("overflow while evaluating {0}")]
    Overflow(&'static str),

    /// An inversion or evaluation point lies outside the configured window.
    #[error("{what} = {value} outside supported range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// A simulated side reached `max_side_length` before its stop rule fired.
    #[error("path side reached the {cap} point cap before the stop rule fired")]
    CapExceeded { cap: usize },

    /// The path does not contain the extrema needed for the requested quantity.
    #[error("insufficient path: {0}")]
    InsufficientPath(&'static str),

    /// A resampling pool is empty or too small.
    #[error("insufficient sample pool: {0}")]
    InsufficientPool(&'static str),

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
