//! Fixed-topology triangle meshes and mesh-sequence processing.
//!
//! This crate holds the geometric ground floor of the toolkit: triangle
//! meshes with vertex adjacency, the uniform (combinatorial) Laplacian,
//! iterative Laplacian smoothing, and the low/high-frequency decomposition
//! of animated mesh sequences. Positions are stored as `f64` in memory and
//! as little-endian `f32` on disk.

mod anim;
mod error;
mod laplacian;
mod mesh;
pub mod obj;
pub mod shapes;
mod vbsq;

pub use anim::{AnimSequence, FrequencySplit};
pub use error::MeshError;
pub use laplacian::{frequency_split, laplacian_smooth, uniform_laplacian, SmoothingConfig};
pub use mesh::{Adjacency, Mesh};
pub use vbsq::{read_sequence, write_sequence};

/// 3D position / displacement type used across the workspace.
pub type Vec3 = nalgebra::Vector3<f64>;
