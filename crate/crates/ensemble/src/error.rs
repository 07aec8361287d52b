use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Motion(#[from] vb_motion::MotionError),

    #[error(transparent)]
    Autodiff(#[from] vb_autodiff::AutodiffError),

    #[error(transparent)]
    Mesh(#[from] vb_mesh::MeshError),

    #[error(transparent)]
    Metrics(#[from] vb_metrics::MetricsError),

    #[error(transparent)]
    Sim(#[from] vb_sim::SimError),

    #[error("{weights} blend weights for {pivots} pivots")]
    WeightCountMismatch { weights: usize, pivots: usize },

    #[error("blend weights must be nonnegative and sum to one (sum = {sum})")]
    BadWeights { sum: f64 },

    #[error("pivot sequences disagree: {details}")]
    SequenceMismatch { details: String },

    #[error("no pivots")]
    EmptyBank,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("kernel fit aborted: non-finite loss at epoch {epoch}")]
    FitDiverged { epoch: usize },

    #[error("{path}: not a usable pivot bank ({reason})")]
    BadBank { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl EnsembleError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EnsembleError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn bank(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        EnsembleError::BadBank {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
