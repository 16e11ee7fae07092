use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("rectangle {x},{y} {w}x{h} does not fit a {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },

    #[error("placement failed after {attempts} attempts")]
    PlacementExhausted { attempts: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("pixel-wise {op} needs binary pixels, found {value} at index {index}")]
    NonBinaryPixel { op: &'static str, index: usize, value: f64 },

    #[error("training diverged at step {step}: {what} is {value}")]
    Diverged { step: usize, what: &'static str, value: f64 },

    #[error("malformed {kind} file {path}: {reason}")]
    Format { kind: &'static str, path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub(crate) fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
