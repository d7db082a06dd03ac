use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building grids, classifying nodes, assembling and
/// solving the discrete systems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty domain: no grid node satisfies phi < 0")]
    EmptyDomain,

    #[error("domain not embedded: inside node {index:?} touches the box boundary")]
    NotEmbedded { index: Vec<usize> },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("BiCGSTAB breakdown after {iterations} iterations ({reason})")]
    Breakdown { iterations: usize, reason: &'static str },

    #[error("iterative solver did not reach the tolerance in {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("empty norm support: no strictly interior node")]
    EmptySupport,

    #[error("exact solution has zero norm; relative error undefined")]
    ZeroReference,

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than by a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::EmptyDomain
                | Error::NotEmbedded { .. }
                | Error::InvalidData(_)
                | Error::Io { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
