use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed arguments (wrong dimension, unsupported kernel for an operation).
    #[error("argument error: {0}")]
    Argument(String),

    /// Parameters outside the model's domain (e.g. a²/4 < b).
    #[error("domain error: {0}")]
    Domain(String),

    /// No sign change on the supplied bracket.
    #[error("bracket error: no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// Iteration limit reached before the tolerance was met.
    #[error("convergence error: {iterations} iterations, bracket width {width}")]
    Convergence { iterations: usize, width: f64 },

    /// An operation was called on input that does not satisfy its precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Invalid simulation or search configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Least-squares rate fit could not be performed.
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
