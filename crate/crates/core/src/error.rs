use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("directory not found: {0}")]
    MissingDirectory(PathBuf),

    #[error("no frames matching {pattern:?} in {dir}")]
    NoFrames { dir: PathBuf, pattern: String },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}{}", context_suffix(.context))]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
        context: Option<String>,
    },

    #[error("frame {width}x{height} is smaller than required {required}x{required}")]
    FrameTooSmall {
        width: usize,
        height: usize,
        required: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("band mismatch: {0}")]
    BandMismatch(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("image error for {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn context_suffix(context: &Option<String>) -> String {
    match context {
        Some(c) => format!(" ({c})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn dims(expected: (usize, usize), actual: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected,
            actual,
            context: None,
        }
    }

    pub(crate) fn dims_in(
        expected: (usize, usize),
        actual: (usize, usize),
        context: impl Into<String>,
    ) -> Self {
        Error::DimensionMismatch {
            expected,
            actual,
            context: Some(context.into()),
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
