use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library.
///
/// Each variant maps to a distinct CLI exit code (see `Error::exit_code`).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A value lies outside its mathematical domain (bad symbol, probability
    /// outside `[0, 1]`, non-normalized pmf, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested exact computation would enumerate more sequences than the
    /// configured guard allows.
    #[error("capacity error: {what} needs {required} enumerated items, limit is {limit}")]
    Capacity {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("unsupported delay {0}: only 0 and 1 are supported")]
    UnsupportedDelay(usize),

    /// A positive weight met a zero-probability denominator.
    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("decode error at symbol index {index}: {reason}")]
    Decode { index: usize, reason: String },

    /// An identity that must hold exactly (up to rounding) was violated.
    #[error("identity check failed: {what} (residual {residual:e})")]
    Identity { what: &'static str, residual: f64 },
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 2,
            Error::Capacity { .. } => 3,
            Error::SupportViolation(_) => 4,
            Error::Domain(_) | Error::Argument(_) | Error::UnsupportedDelay(_) => 5,
            Error::Unsupported(_) => 6,
            Error::NonConvergence { .. } => 7,
            Error::Decode { .. } => 8,
            Error::Identity { .. } => 9,
        }
    }

    /// Short machine-readable tag used in JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Capacity { .. } => "capacity",
            Error::UnsupportedDelay(_) => "unsupported_delay",
            Error::SupportViolation(_) => "support_violation",
            Error::Parse(_) => "parse",
            Error::Argument(_) => "argument",
            Error::Unsupported(_) => "unsupported",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Decode { .. } => "decode",
            Error::Identity { .. } => "identity",
        }
    }
}
