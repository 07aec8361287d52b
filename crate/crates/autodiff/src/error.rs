use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    /// Incompatible operand shapes; names the op so graph-construction
    /// mistakes point at their source.
    #[error("{op}: incompatible shapes ({details})")]
    Shape { op: &'static str, details: String },

    #[error("parameter {0:?} registered twice")]
    DuplicateParam(String),

    #[error("parameter {0:?} not found")]
    MissingParam(String),

    #[error("parameter {name:?}: shape {got:?} does not match existing {expected:?}")]
    ShapeChanged {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: not a usable checkpoint ({reason})")]
    BadCheckpoint { path: PathBuf, reason: String },
}

impl AutodiffError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AutodiffError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, details: impl Into<String>) -> Self {
        AutodiffError::Shape {
            op,
            details: details.into(),
        }
    }
}
