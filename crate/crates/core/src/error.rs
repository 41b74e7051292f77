use std::path::PathBuf;

use thiserror::Error;

/// A layer whose parameters do not fit the shape flowing into it.
///
/// `layer_id` is the 1-based layer position; 0 refers to the model input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("shape error at layer {layer_id}: {reason}")]
pub struct ShapeError {
    pub layer_id: usize,
    pub reason: String,
}

impl ShapeError {
    pub fn new(layer_id: usize, reason: impl Into<String>) -> Self {
        Self {
            layer_id,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Shape(#[from] ShapeError),

    #[error("{}: parse error: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{}: schema error: {message}", path.display())]
    Schema { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("selection fraction must be in (0, 1], got {0}")]
    InvalidFraction(f64),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
