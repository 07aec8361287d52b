//! Convex blending of pivot predictions.

use serde::{Deserialize, Serialize};
use vb_mesh::{AnimSequence, Vec3};

use crate::EnsembleError;

/// A point on the probability simplex: one weight per pivot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendWeights(Vec<f64>);

impl BlendWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, EnsembleError> {
        if weights.is_empty() {
            return Err(EnsembleError::EmptyBank);
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(EnsembleError::BadWeights { sum });
        }
        Ok(BlendWeights(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the heaviest pivot (ties to the lowest index).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.0.iter().enumerate() {
            if w > self.0[best] {
                best = i;
            }
        }
        best
    }
}

/// Weighted sum of per-pivot predictions, frame by frame. All sequences
/// must agree on frame count, vertex count, and frame rate.
pub fn blend_sequences(
    sequences: &[AnimSequence],
    weights: &BlendWeights,
) -> Result<AnimSequence, EnsembleError> {
    if sequences.len() != weights.len() {
        return Err(EnsembleError::WeightCountMismatch {
            weights: weights.len(),
            pivots: sequences.len(),
        });
    }
    let first = &sequences[0];
    for (i, s) in sequences.iter().enumerate() {
        if s.frame_count() != first.frame_count()
            || s.vertex_count() != first.vertex_count()
            || s.frame_rate() != first.frame_rate()
        {
            return Err(EnsembleError::SequenceMismatch {
                details: format!(
                    "sequence {i} is {}x{} at {} fps, sequence 0 is {}x{} at {} fps",
                    s.frame_count(),
                    s.vertex_count(),
                    s.frame_rate(),
                    first.frame_count(),
                    first.vertex_count(),
                    first.frame_rate()
                ),
            });
        }
    }

    let mut frames = vec![vec![Vec3::zeros(); first.vertex_count()]; first.frame_count()];
    for (seq, &w) in sequences.iter().zip(weights.as_slice()) {
        for (f, frame) in seq.frames().iter().enumerate() {
            for (v, p) in frame.iter().enumerate() {
                frames[f][v] += p * w;
            }
        }
    }
    Ok(AnimSequence::new(frames, first.frame_rate())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_seq(p: Vec3, frames: usize) -> AnimSequence {
        AnimSequence::new(vec![vec![p, 2.0 * p]; frames], 30.0).unwrap()
    }

    #[test]
    fn blending_interpolates_exactly() {
        let a = constant_seq(Vec3::new(1.0, 0.0, 0.0), 3);
        let b = constant_seq(Vec3::new(0.0, 2.0, 0.0), 3);
        let w = BlendWeights::new(vec![0.25, 0.75]).unwrap();
        let blend = blend_sequences(&[a, b], &w).unwrap();
        let p = blend.frame(1)[0];
        assert!((p - Vec3::new(0.25, 1.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bad_weights_are_rejected() {
        assert!(BlendWeights::new(vec![0.5, 0.6]).is_err());
        assert!(BlendWeights::new(vec![-0.1, 1.1]).is_err());
        assert!(BlendWeights::new(vec![f64::NAN, 1.0]).is_err());
        assert!(BlendWeights::new(Vec::new()).is_err());
    }

    #[test]
    fn mismatched_sequences_are_rejected() {
        let a = constant_seq(Vec3::new(1.0, 0.0, 0.0), 3);
        let b = constant_seq(Vec3::new(0.0, 2.0, 0.0), 4);
        let w = BlendWeights::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            blend_sequences(&[a, b], &w),
            Err(EnsembleError::SequenceMismatch { .. })
        ));
    }
}
