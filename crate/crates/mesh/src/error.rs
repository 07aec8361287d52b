use thiserror::Error;

/// Errors raised by mesh construction, smoothing, and sequence I/O.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("face {face} references vertex {index} but mesh has {vertex_count} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("face {face} is degenerate: indices ({0}, {1}, {2}) are not distinct", .indices[0], .indices[1], .indices[2])]
    DegenerateFace { face: usize, indices: [u32; 3] },
    #[error("vertex {0} is isolated (no neighbors)")]
    IsolatedVertex(usize),
    #[error("smoothing step must lie in (0, 1], got {0}")]
    InvalidStep(f64),
    #[error("non-finite position at frame {frame}, vertex {vertex}")]
    NonFinitePosition { frame: usize, vertex: usize },
    #[error("frame {frame} has {got} vertices, expected {expected}")]
    FrameVertexMismatch {
        frame: usize,
        got: usize,
        expected: usize,
    },
    #[error("sequence has {got} vertices per frame but mesh has {expected}")]
    TopologyMismatch { got: usize, expected: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    ObjParse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: bad sequence file: {0}", .message)]
    BadSequenceFile { path: String, message: String },
}

impl MeshError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        MeshError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
