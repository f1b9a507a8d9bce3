use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Lanczos did not converge: residual {residual:.3e} at Krylov dimension {dim}")]
    LanczosNoConvergence { residual: f64, dim: usize },
    #[error("Picard iteration did not contract within {iterations} iterations (last residual {residual:.3e})")]
    NoContraction { iterations: usize, residual: f64 },
    #[error("size cap exceeded: {what} needs {needed} entries, cap is {cap}")]
    SizeCap { what: &'static str, needed: u128, cap: u128 },
    #[error("dimension {dim} does not factor as {factors:?}")]
    Factorization { dim: usize, factors: Vec<usize> },
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("format error: {0}")]
    Format(String),
    #[error("rate fit: {0}")]
    Fit(String),
    #[error("missing inputs: {}", .0.join(", "))]
    MissingInputs(Vec<String>),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration problems map to exit code 2, everything else numerical or
    /// I/O to 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidGrid(_) => 2,
            _ => 3,
        }
    }
}
