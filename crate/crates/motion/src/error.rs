use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error(transparent)]
    Autodiff(#[from] vb_autodiff::AutodiffError),

    #[error(transparent)]
    Skinning(#[from] vb_skinning::SkinningError),

    #[error(transparent)]
    Mesh(#[from] vb_mesh::MeshError),

    #[error(transparent)]
    Sim(#[from] vb_sim::SimError),

    #[error("rig has {rig} bones but the network head expects {net}")]
    BoneCountMismatch { rig: usize, net: usize },

    #[error("sequence has {sequence} vertices but the rig has {rig}")]
    VertexCountMismatch { sequence: usize, rig: usize },

    #[error("motion ({motion} frames) and target ({target} frames) disagree")]
    FrameCountMismatch { motion: usize, target: usize },

    #[error("training aborted: non-finite loss at epoch {epoch}, chunk {chunk}")]
    NonFiniteLoss { epoch: usize, chunk: usize },

    #[error("training data is empty")]
    EmptyDataset,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: not a usable model bundle ({reason})")]
    BadBundle { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MotionError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MotionError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn bundle(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        MotionError::BadBundle {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
