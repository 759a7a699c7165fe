use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh dimensions: {0}")]
    InvalidMesh(String),
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid elastic moduli: {0}")]
    InvalidModuli(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("linear solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverNonConvergence { residual: f64, iterations: usize },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("point outside the sample domain")]
    Outside,
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed {kind} file: {detail}")]
    Format { kind: &'static str, detail: String },
    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn in_run(self, context: impl Into<String>) -> Self {
        Error::Run { context: context.into(), source: Box::new(self) }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
