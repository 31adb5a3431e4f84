use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("dimension {0} must be even")]
    Parity(usize),
    #[error("memory budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: String,
        needed: usize,
        budget: usize,
    },
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("state is not normalized (norm {0})")]
    Normalization(f64),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Budget and size-limit failures share an exit code in the CLI.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. } | Error::SizeLimit(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
