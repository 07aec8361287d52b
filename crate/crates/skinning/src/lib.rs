//! Linear blend skinning and skinning decomposition.
//!
//! Given an animated mesh sequence, the decomposition recovers a compact
//! rig: a rest pose, a sparse convex weight matrix, and a per-frame rigid
//! transform per bone, such that blending the transformed rest pose
//! reproduces the sequence. Bones are free-floating rigid proxies with no
//! hierarchy; the alternating solve updates weights (per-vertex sparse
//! nonnegative least squares) and transforms (per-bone weighted Procrustes)
//! until the residual stops improving.

mod error;
mod lbs;
mod model;
mod nnls;
mod procrustes;
mod ssdr;
mod tracks;
mod vbrig;

pub use error::SkinningError;
pub use lbs::lbs_pose;
pub use model::{SkinModel, WeightEntry};
pub use nnls::nnls;
pub use procrustes::{weighted_procrustes, ProcrustesResult};
pub use ssdr::{
    ssdr_decompose, ssdr_decompose_nested, ssdr_init, ssdr_solve_transforms, ssdr_solve_weights,
    DecompositionResult, InitClustering, SsdrConfig,
};
pub use tracks::{BoneTracks, RigidTransform};
pub use vbrig::{read_rig, write_rig};
