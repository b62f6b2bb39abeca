use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its documented domain. `name` is the config key.
    InvalidParameter { name: &'static str, reason: &'static str },
    /// A trace is shorter than an operation requires.
    TraceTooShort { needed: usize, got: usize },
    /// Two sequences that must have equal length do not.
    LengthMismatch { left: usize, right: usize },
    /// Cholesky factorization met a non-positive pivot.
    NotPositiveDefinite { pivot: usize },
    /// The simulation produced a non-finite value.
    Numerical { step: usize, what: &'static str },
    /// No autocorrelation peak stood out from the noise floor.
    PeriodNotRecoverable,
    /// R² is undefined for a constant target.
    UndefinedR2,
    /// Linear system is singular (e.g. collinear features with no ridge).
    Singular,
    /// An iterative solver stopped at its cap without meeting its tolerance.
    NotConverged { iterations: usize, violation: f64 },
    /// The optimizer never saw a finite objective value.
    NoFeasibleEvaluation,
    /// Not enough samples for the requested fold count.
    TooFewSamples { samples: usize, folds: usize },
    /// A required input was empty.
    Empty(&'static str),
    /// A configuration key is unknown, malformed or out of range.
    Config { key: String, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid `{name}`: {reason}"),
            Error::TraceTooShort { needed, got } => {
                write!(f, "trace too short: need at least {needed} samples, got {got}")
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::NotPositiveDefinite { pivot } => {
                write!(f, "matrix not positive definite (pivot {pivot})")
            }
            Error::Numerical { step, what } => {
                write!(f, "numerical failure at step {step}: {what}")
            }
            Error::PeriodNotRecoverable => write!(f, "period not recoverable"),
            Error::UndefinedR2 => write!(f, "R² undefined for constant targets"),
            Error::Singular => write!(f, "singular linear system"),
            Error::NotConverged { iterations, violation } => write!(
                f,
                "solver did not converge after {iterations} iterations (KKT violation {violation:e})"
            ),
            Error::NoFeasibleEvaluation => {
                write!(f, "optimizer budget exhausted without a feasible evaluation")
            }
            Error::TooFewSamples { samples, folds } => {
                write!(f, "{samples} samples cannot be split into {folds} folds")
            }
            Error::Empty(what) => write!(f, "{what} is empty"),
            Error::Config { key, reason } => write!(f, "config key `{key}`: {reason}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
