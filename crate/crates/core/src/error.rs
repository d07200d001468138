use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, PsdmfError>;

#[derive(Debug, Error)]
pub enum PsdmfError {
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix is not symmetric ({context})")]
    NotSymmetric { context: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite state after {update} (iteration {iteration})")]
    Diverged { update: String, iteration: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl PsdmfError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PsdmfError::InvalidArgument(msg.into())
    }
}
