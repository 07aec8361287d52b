use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad simulation parameters: {0}")]
    BadParams(String),
    #[error("bad garment template: {0}")]
    BadTemplate(String),
    #[error("frame {frame} out of range (sequence has {count})")]
    FrameOutOfRange { frame: usize, count: usize },
    #[error("joint {joint} at frame {frame}: quaternion norm {norm} is not unit")]
    QuatNotUnit {
        frame: usize,
        joint: usize,
        norm: f64,
    },
    #[error("motion frame {frame} has {got} joint rotations, expected {expected}")]
    JointCountMismatch {
        frame: usize,
        got: usize,
        expected: usize,
    },
    #[error("simulation exploded at frame {frame}: speed {speed:.1} m/s")]
    Explosion { frame: usize, speed: f64 },
    #[error("sequence {name}: {source}")]
    Sequence {
        name: String,
        #[source]
        source: Box<SimError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Mesh(#[from] vb_mesh::MeshError),
}

impl SimError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn json(path: &std::path::Path, source: serde_json::Error) -> Self {
        SimError::Json {
            path: path.display().to_string(),
            source,
        }
    }
}
