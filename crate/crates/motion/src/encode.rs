//! Input encodings and the mesh Laplacian as a sparse tape operator.

use std::rc::Rc;

use vb_autodiff::Sparse;
use vb_mesh::Adjacency;
use vb_sim::{MotionFrame, JOINT_COUNT};
use vb_skinning::RigidTransform;

/// Network input width for one frame of body motion: root translation
/// plus one quaternion per joint.
pub const POSE_INPUT_DIM: usize = 3 + 4 * JOINT_COUNT;

/// Flattens a motion frame to (T_b ‖ R_b1 ‖ … ‖ R_bJ), quaternions as
/// (w, x, y, z).
pub fn pose_input(frame: &MotionFrame) -> Vec<f64> {
    let mut out = Vec::with_capacity(POSE_INPUT_DIM);
    out.push(frame.root_translation.x);
    out.push(frame.root_translation.y);
    out.push(frame.root_translation.z);
    for q in &frame.joint_rotations {
        out.push(q.w);
        out.push(q.i);
        out.push(q.j);
        out.push(q.k);
    }
    out
}

/// Per-bone input width for the high-frequency global stream: a row-major
/// rotation matrix plus a translation.
pub const BONE_INPUT_DIM: usize = 12;

/// Flattens one frame of bone transforms to (R ‖ T) per bone.
pub fn tracks_input(transforms: &[RigidTransform]) -> Vec<f64> {
    let mut out = Vec::with_capacity(transforms.len() * BONE_INPUT_DIM);
    for t in transforms {
        for r in 0..3 {
            for c in 0..3 {
                out.push(t.rotation[(r, c)]);
            }
        }
        out.push(t.translation.x);
        out.push(t.translation.y);
        out.push(t.translation.z);
    }
    out
}

/// The uniform Laplacian (mean of neighbors minus self) as a sparse
/// matrix, matching the smoothing operator used for the frequency split.
pub fn laplacian_operator(adjacency: &Adjacency) -> Rc<Sparse> {
    let n = adjacency.vertex_count();
    let mut triplets = Vec::new();
    for i in 0..n {
        let neighbors = adjacency.neighbors(i);
        if neighbors.is_empty() {
            continue; // isolated vertices contribute nothing
        }
        let w = 1.0 / neighbors.len() as f64;
        triplets.push((i, i, -1.0));
        for &j in neighbors {
            triplets.push((i, j as usize, w));
        }
    }
    Rc::new(Sparse::from_triplets(n, n, &triplets))
}
