use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    /// Points (flat grid indices) where a Hessian functional left its domain.
    #[error("functional `{functional}` evaluated outside its domain at {} point(s), first index {}", .points.len(), .points.first().copied().unwrap_or(0))]
    DomainViolation { functional: String, points: Vec<usize> },
    /// Iterative solve stopped at the iteration cap; `history` holds relative residuals.
    #[error("no convergence after {iterations} iterations (relative residual {last_residual:e})")]
    Convergence { iterations: usize, last_residual: f64, history: Vec<f64> },
    #[error("line search failed at step {step}: no decrease down to step length {min_step:e}")]
    LineSearch { step: usize, min_step: f64, value: f64 },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
