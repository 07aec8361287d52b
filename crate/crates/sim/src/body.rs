//! Articulated capsule body: a 14-joint skeleton posed by forward
//! kinematics, six rigid capsules attached to its joints, and a fixed set
//! of 512 surface samples with outward normals.

use std::f64::consts::PI;

use vb_mesh::Vec3;

use crate::{BodyMotion, SimError};

pub const JOINT_COUNT: usize = 14;

pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "root",
    "spine",
    "chest",
    "neck",
    "l_hip",
    "l_knee",
    "l_ankle",
    "r_hip",
    "r_knee",
    "r_ankle",
    "l_shoulder",
    "l_elbow",
    "r_shoulder",
    "r_elbow",
];

pub const JOINT_PARENTS: [Option<usize>; JOINT_COUNT] = [
    None,
    Some(0),
    Some(1),
    Some(2),
    Some(0),
    Some(4),
    Some(5),
    Some(0),
    Some(7),
    Some(8),
    Some(2),
    Some(10),
    Some(2),
    Some(12),
];

/// Joint offsets from their parents, meters, rest pose (y up, x left).
fn joint_offsets() -> [Vec3; JOINT_COUNT] {
    [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(0.0, 0.10, 0.0),
        Vec3::new(0.0, 0.22, 0.0),
        Vec3::new(0.0, 0.20, 0.0),
        Vec3::new(0.09, -0.04, 0.0),
        Vec3::new(0.0, -0.40, 0.0),
        Vec3::new(0.0, -0.40, 0.0),
        Vec3::new(-0.09, -0.04, 0.0),
        Vec3::new(0.0, -0.40, 0.0),
        Vec3::new(0.0, -0.40, 0.0),
        Vec3::new(0.18, 0.16, 0.0),
        Vec3::new(0.26, 0.0, 0.0),
        Vec3::new(-0.18, 0.16, 0.0),
        Vec3::new(-0.26, 0.0, 0.0),
    ]
}

/// A rigid capsule in its joint's local frame, with a fixed surface-sample
/// budget. Capsules do not articulate internally: a whole leg is one
/// capsule that follows the hip, which keeps collision projection cheap and
/// sample motion exactly rigid.
#[derive(Debug, Clone, Copy)]
pub struct Capsule {
    pub joint: usize,
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
    pub samples: usize,
}

/// The six body capsules: torso, pelvis, both legs, both arms.
/// Sample budgets add up to 512.
pub fn body_capsules() -> Vec<Capsule> {
    vec![
        Capsule {
            joint: 1,
            a: Vec3::new(0.0, 0.0, 0.0),
            b: Vec3::new(0.0, 0.40, 0.0),
            radius: 0.13,
            samples: 128,
        },
        Capsule {
            joint: 0,
            a: Vec3::new(0.07, 0.0, 0.0),
            b: Vec3::new(-0.07, 0.0, 0.0),
            radius: 0.11,
            samples: 96,
        },
        Capsule {
            joint: 4,
            a: Vec3::new(0.0, 0.0, 0.0),
            b: Vec3::new(0.0, -0.78, 0.0),
            radius: 0.07,
            samples: 96,
        },
        Capsule {
            joint: 7,
            a: Vec3::new(0.0, 0.0, 0.0),
            b: Vec3::new(0.0, -0.78, 0.0),
            radius: 0.07,
            samples: 96,
        },
        Capsule {
            joint: 10,
            a: Vec3::new(0.0, 0.0, 0.0),
            b: Vec3::new(0.50, 0.0, 0.0),
            radius: 0.045,
            samples: 48,
        },
        Capsule {
            joint: 12,
            a: Vec3::new(0.0, 0.0, 0.0),
            b: Vec3::new(-0.50, 0.0, 0.0),
            radius: 0.045,
            samples: 48,
        },
    ]
}

/// World pose of one joint.
#[derive(Debug, Clone, Copy)]
pub struct JointPose {
    pub position: Vec3,
    pub rotation: nalgebra::UnitQuaternion<f64>,
}

/// Forward kinematics for one motion frame.
pub fn pose_skeleton(motion: &BodyMotion, frame: usize) -> Result<Vec<JointPose>, SimError> {
    if frame >= motion.frame_count() {
        return Err(SimError::FrameOutOfRange {
            frame,
            count: motion.frame_count(),
        });
    }
    let offsets = joint_offsets();
    let mf = motion.frame(frame);
    let mut poses = Vec::with_capacity(JOINT_COUNT);
    for j in 0..JOINT_COUNT {
        let pose = match JOINT_PARENTS[j] {
            None => JointPose {
                position: mf.root_translation,
                rotation: mf.joint_rotations[j],
            },
            Some(p) => {
                let parent: &JointPose = &poses[p];
                JointPose {
                    position: parent.position + parent.rotation * offsets[j],
                    rotation: parent.rotation * mf.joint_rotations[j],
                }
            }
        };
        poses.push(pose);
    }
    Ok(poses)
}

/// Joint poses in the rest configuration: identity rotations, root at the
/// origin. Attachment offsets are expressed relative to these.
pub fn rest_joint_poses() -> Vec<JointPose> {
    let offsets = joint_offsets();
    let mut poses: Vec<JointPose> = Vec::with_capacity(JOINT_COUNT);
    for j in 0..JOINT_COUNT {
        let position = match JOINT_PARENTS[j] {
            None => Vec3::zeros(),
            Some(p) => poses[p].position + offsets[j],
        };
        poses.push(JointPose {
            position,
            rotation: nalgebra::UnitQuaternion::identity(),
        });
    }
    poses
}

/// A capsule in world space.
#[derive(Debug, Clone, Copy)]
pub struct PosedCapsule {
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
}

pub fn posed_capsules(poses: &[JointPose]) -> Vec<PosedCapsule> {
    body_capsules()
        .iter()
        .map(|c| {
            let jp = &poses[c.joint];
            PosedCapsule {
                a: jp.position + jp.rotation * c.a,
                b: jp.position + jp.rotation * c.b,
                radius: c.radius,
            }
        })
        .collect()
}

/// Body surface samples for one frame: positions and unit outward normals.
#[derive(Debug, Clone)]
pub struct BodySurface {
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
}

impl BodySurface {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Index of the closest sample to `p` (brute force; ties to the lowest
    /// index — the sample set is small and fixed at 512).
    pub fn nearest(&self, p: &Vec3) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, s) in self.positions.iter().enumerate() {
            let d = (p - s).norm_squared();
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }
}

const GOLDEN_ANGLE: f64 = 2.399963229728653;

/// Deterministic spiral sampling of a capsule surface in its local frame.
/// Returns (position, outward normal) pairs.
fn capsule_local_samples(c: &Capsule) -> Vec<(Vec3, Vec3)> {
    let h = (c.b - c.a).norm();
    let d = (c.b - c.a) / h;
    // A stable perpendicular basis: cross with the axis least aligned.
    let pick = [Vec3::x(), Vec3::y(), Vec3::z()]
        .into_iter()
        .min_by(|e1, e2| {
            d.dot(e1)
                .abs()
                .partial_cmp(&d.dot(e2).abs())
                .unwrap()
        })
        .unwrap();
    let u = d.cross(&pick).normalize();
    let v = d.cross(&u);

    let cap = c.radius * PI / 2.0;
    let total = h + 2.0 * cap;
    let mut out = Vec::with_capacity(c.samples);
    for k in 0..c.samples {
        let s = (k as f64 + 0.5) / c.samples as f64 * total;
        let phi = k as f64 * GOLDEN_ANGLE;
        let radial = u * phi.cos() + v * phi.sin();
        let (pos, normal) = if s < cap {
            let alpha = s / c.radius;
            let w = -d * alpha.cos() + radial * alpha.sin();
            (c.a + c.radius * w, w)
        } else if s < cap + h {
            (c.a + d * (s - cap) + c.radius * radial, radial)
        } else {
            let alpha = (s - cap - h) / c.radius;
            let w = radial * alpha.cos() + d * alpha.sin();
            (c.b + c.radius * w, w)
        };
        out.push((pos, normal));
    }
    out
}

/// Samples the posed body surface at one frame. Sample order is fixed:
/// capsules in [`body_capsules`] order, spiral order within each.
pub fn body_surface(motion: &BodyMotion, frame: usize) -> Result<BodySurface, SimError> {
    let poses = pose_skeleton(motion, frame)?;
    let mut positions = Vec::with_capacity(512);
    let mut normals = Vec::with_capacity(512);
    for c in body_capsules() {
        let jp = &poses[c.joint];
        for (lp, ln) in capsule_local_samples(&c) {
            positions.push(jp.position + jp.rotation * lp);
            normals.push(jp.rotation * ln);
        }
    }
    Ok(BodySurface { positions, normals })
}
