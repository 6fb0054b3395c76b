use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = QsciError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QsciError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate orbital energies for (i={i}, j={j}, a={a}, b={b}): denominator {denominator:e}")]
    DegenerateOrbitals {
        i: usize,
        j: usize,
        a: usize,
        b: usize,
        denominator: f64,
    },

    #[error("electron count mismatch: {0}")]
    ElectronCount(String),

    #[error("{kind} violated (deviation {deviation:e})")]
    Symmetry { kind: &'static str, deviation: f64 },

    #[error("Davidson did not converge in {iterations} iterations (best residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("capacity exceeded for {what}: {requested} > limit {limit}")]
    Capacity {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty subspace: {0}")]
    EmptySubspace(String),

    #[error("unrecoverable input: no physical configurations and no HF fallback")]
    Unrecoverable,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl QsciError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        QsciError::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QsciError::Io {
            path: path.into(),
            source,
        }
    }
}
