use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated input: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("box {index}: min corner exceeds max corner on axis {axis}")]
    Geometry { index: usize, axis: usize },

    #[error("duplicate instance id {instance} (boxes {first} and {second})")]
    DuplicateInstance {
        instance: u32,
        first: usize,
        second: usize,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error at index {index}: {message}")]
    Domain { index: usize, message: String },

    #[error(
        "kernel matrix not positive definite (length_scale={length_scale}, output_scale={output_scale}, n1={n1})"
    )]
    Conditioning {
        length_scale: f64,
        output_scale: f64,
        n1: usize,
    },

    #[error("degenerate pair ({first}, {second}): instance {missing} has no determined region")]
    DegeneratePair {
        first: u32,
        second: u32,
        missing: u32,
    },

    #[error("empty mask")]
    EmptyMask,

    #[error("scene generation failed: {0}")]
    Generation(String),

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

    /// Numeric failures (as opposed to bad input or bad arguments).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Conditioning { .. } | Error::Domain { .. })
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
