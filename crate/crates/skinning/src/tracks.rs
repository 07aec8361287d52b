use nalgebra::{Matrix3, UnitQuaternion};
use vb_mesh::Vec3;

use crate::SkinningError;

/// A rigid transform: proper rotation plus translation, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_parts(rotation: Matrix3<f64>, translation: Vec3) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Composes `self` after `other`: `(self ∘ other)(p) = self(other(p))`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Max-norm deviation of `R^T R` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let e = self.rotation.transpose() * self.rotation - Matrix3::identity();
        e.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>, translation: Vec3) -> Self {
        RigidTransform {
            rotation: *q.to_rotation_matrix().matrix(),
            translation,
        }
    }
}

/// Per-frame, per-bone rigid transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct BoneTracks {
    frames: Vec<Vec<RigidTransform>>,
}

impl BoneTracks {
    /// Validates that every rotation is orthonormal with positive determinant.
    pub fn new(frames: Vec<Vec<RigidTransform>>) -> Result<Self, SkinningError> {
        for (fi, frame) in frames.iter().enumerate() {
            for (bi, t) in frame.iter().enumerate() {
                let dev = t.orthonormality_error();
                if dev > 1e-6 || t.rotation.determinant() <= 0.0 {
                    return Err(SkinningError::BadRotation {
                        bone: bi,
                        frame: fi,
                        deviation: dev,
                    });
                }
            }
        }
        Ok(BoneTracks { frames })
    }

    /// Constructs without the orthonormality check; callers guarantee the
    /// transforms came from a validated source (e.g. Procrustes output).
    pub fn from_frames_unchecked(frames: Vec<Vec<RigidTransform>>) -> Self {
        BoneTracks { frames }
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn bone_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.len())
    }

    pub fn frame(&self, index: usize) -> &[RigidTransform] {
        &self.frames[index]
    }

    pub fn frames(&self) -> &[Vec<RigidTransform>] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [Vec<RigidTransform>] {
        &mut self.frames
    }

    pub fn slice(&self, start: usize, end: usize) -> BoneTracks {
        BoneTracks {
            frames: self.frames[start..end].to_vec(),
        }
    }
}
