use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("ellipticity fails at node {node}: smallest eigenvalue {min_eig:.3e}")]
    Ellipticity { node: usize, min_eig: f64 },

    #[error("uniqueness form fails on sampled test function {sample}: value {value:.3e}")]
    Uniqueness { sample: usize, value: f64 },

    #[error("linear solver stopped after {iterations} iterations at relative residual {residual:.3e}")]
    Solver { iterations: usize, residual: f64 },

    #[error("iteration diverged after {iterations} steps: {reason}")]
    Diverged { iterations: usize, reason: String },

    #[error("no convergence after {iterations} iterations: {reason}")]
    NoConvergence { iterations: usize, reason: String },

    #[error("solution blew up at r = {r:.6e}")]
    BlowUp { r: f64 },

    #[error("profile could not be classified: {0}")]
    Unclassified(String),

    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
