//! Cloth simulation against an articulated capsule body.
//!
//! Produces ground-truth garment animation for training data: a
//! position-based cloth solver (XPBD-style substeps with stretch, dihedral
//! bending, and capsule collision constraints) driven by procedurally
//! generated body motion. Three physical parameters — bending stiffness,
//! mass density, and timescale — control the material response and are the
//! coordinates along which datasets are sampled.

mod body;
mod dataset;
mod error;
mod motion;
mod params;
mod template;
mod xpbd;

pub use body::{
    body_capsules, body_surface, pose_skeleton, posed_capsules, rest_joint_poses, BodySurface,
    Capsule, JointPose, PosedCapsule, JOINT_COUNT, JOINT_NAMES, JOINT_PARENTS,
};
pub use dataset::{generate_dataset, DatasetManifest, DatasetSpec, SequenceRecord};
pub use error::SimError;
pub use motion::{
    generate_body_motion, read_motion, write_motion, BodyMotion, MotionFrame, MotionStyle,
};
pub use params::SimParams;
pub use template::{dress_template, skirt_template, BendElement, GarmentSpec, GarmentTemplate};
pub use xpbd::{max_penetration, simulate, simulate_opts, SimOptions};
