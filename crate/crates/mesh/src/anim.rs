use crate::{Mesh, MeshError, Vec3};

/// A time series of vertex positions over a fixed topology.
///
/// Frames all carry the same vertex count and every coordinate is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct AnimSequence {
    frames: Vec<Vec<Vec3>>,
    frame_rate: f64,
}

impl AnimSequence {
    pub fn new(frames: Vec<Vec<Vec3>>, frame_rate: f64) -> Result<Self, MeshError> {
        if let Some(first) = frames.first() {
            let expected = first.len();
            for (fi, frame) in frames.iter().enumerate() {
                if frame.len() != expected {
                    return Err(MeshError::FrameVertexMismatch {
                        frame: fi,
                        got: frame.len(),
                        expected,
                    });
                }
                for (vi, p) in frame.iter().enumerate() {
                    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                        return Err(MeshError::NonFinitePosition {
                            frame: fi,
                            vertex: vi,
                        });
                    }
                }
            }
        }
        Ok(AnimSequence { frames, frame_rate })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.len())
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn frame(&self, index: usize) -> &[Vec3] {
        &self.frames[index]
    }

    pub fn frames(&self) -> &[Vec<Vec3>] {
        &self.frames
    }

    /// Checks that this sequence matches the mesh's vertex count.
    pub fn check_topology(&self, mesh: &Mesh) -> Result<(), MeshError> {
        if self.vertex_count() != mesh.vertex_count() {
            return Err(MeshError::TopologyMismatch {
                got: self.vertex_count(),
                expected: mesh.vertex_count(),
            });
        }
        Ok(())
    }

    /// Concatenates sequences frame-wise; all inputs must share vertex count
    /// and frame rate.
    pub fn concat(parts: &[&AnimSequence]) -> Result<AnimSequence, MeshError> {
        let mut frames = Vec::new();
        let mut rate = 0.0;
        for (i, part) in parts.iter().enumerate() {
            if i == 0 {
                rate = part.frame_rate;
            }
            if i > 0 && part.vertex_count() != frames.first().map_or(0, |f: &Vec<Vec3>| f.len()) {
                return Err(MeshError::TopologyMismatch {
                    got: part.vertex_count(),
                    expected: frames.first().map_or(0, |f: &Vec<Vec3>| f.len()),
                });
            }
            frames.extend(part.frames.iter().cloned());
        }
        AnimSequence::new(frames, rate)
    }

    /// Bounding-box diagonal over all frames.
    pub fn bounding_box_diagonal(&self) -> f64 {
        let all: Vec<Vec3> = self.frames.iter().flatten().copied().collect();
        crate::mesh::bounding_box_diagonal(&all)
    }

    /// Slices frames `[start, end)` into a new sequence.
    pub fn slice(&self, start: usize, end: usize) -> AnimSequence {
        AnimSequence {
            frames: self.frames[start..end].to_vec(),
            frame_rate: self.frame_rate,
        }
    }
}

/// Low/high split of an animation: `low` holds smoothed frames, `high`
/// holds the per-vertex residual displacements, and `low + high`
/// reconstructs the input.
#[derive(Debug, Clone)]
pub struct FrequencySplit {
    pub low: AnimSequence,
    pub high: AnimSequence,
}

impl FrequencySplit {
    /// Recomposes `low + high` into a full sequence.
    pub fn recompose(&self) -> AnimSequence {
        let frames = self
            .low
            .frames()
            .iter()
            .zip(self.high.frames())
            .map(|(lo, hi)| lo.iter().zip(hi).map(|(a, b)| a + b).collect())
            .collect();
        AnimSequence::new(frames, self.low.frame_rate()).expect("recomposition of valid frames")
    }
}
