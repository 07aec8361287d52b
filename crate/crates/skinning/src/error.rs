use thiserror::Error;

#[derive(Debug, Error)]
pub enum SkinningError {
    #[error("expected {expected} bone transforms, got {got}")]
    BoneCountMismatch { expected: usize, got: usize },
    #[error("expected {expected} vertices, got {got}")]
    VertexCountMismatch { expected: usize, got: usize },
    #[error("expected {expected} frames, got {got}")]
    FrameCountMismatch { expected: usize, got: usize },
    #[error("bone count {bone_count} exceeds limit {limit}")]
    TooManyBones { bone_count: usize, limit: usize },
    #[error("decomposition needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("bone count must be at least 1")]
    NoBones,
    #[error("sparseness must be at least 1")]
    ZeroSparseness,
    #[error(
        "objective increased from {previous:.6e} to {current:.6e} at iteration {iteration} ({phase})"
    )]
    Diverged {
        iteration: usize,
        phase: &'static str,
        previous: f64,
        current: f64,
    },
    #[error("weight row {vertex}: {reason}")]
    BadWeightRow { vertex: usize, reason: String },
    #[error("rotation {bone} at frame {frame} is not orthonormal (deviation {deviation:.3e})")]
    BadRotation {
        bone: usize,
        frame: usize,
        deviation: f64,
    },
    #[error("normal system is singular")]
    Singular,
    #[error("nested decomposition requires more bones than the previous result ({previous} -> {requested})")]
    NestedNotLarger { previous: usize, requested: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad rig file: {reason}")]
    BadRigFile { path: String, reason: String },
    #[error(transparent)]
    Mesh(#[from] vb_mesh::MeshError),
}

impl SkinningError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        SkinningError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
