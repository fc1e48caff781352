use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Parameter errors (`InvalidParameter`, `Supercritical`, ...) are usage
/// problems; `NoConvergence` and friends are numerical failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmlError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exponent q = {q} is not subcritical in dimension {d} (critical exponent {critical})")]
    Supercritical { d: usize, q: f64, critical: f64 },

    #[error("exponent q = 2 is a pole of every formula with 1/(q-2)")]
    QuadraticExponent,

    #[error("wrong regime: {0}")]
    WrongRegime(&'static str),

    #[error("invalid meridian profile: {0}")]
    InvalidProfile(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("bracket not found: {0}")]
    BracketFailure(String),

    #[error("function must be strictly positive: {0}")]
    NotPositive(String),

    #[error("time step underflow in nonlinear flow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("curve invariant violated: {0}")]
    CurveInvariant(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, SmlError>;

impl From<std::io::Error> for SmlError {
    fn from(e: std::io::Error) -> Self {
        SmlError::Io(e.to_string())
    }
}
