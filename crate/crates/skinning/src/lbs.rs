use vb_mesh::Vec3;

use crate::{RigidTransform, SkinModel, SkinningError};

/// Poses a skin model with one frame of bone transforms:
/// `v_i = Σ_j w_ij (R_j p_i + T_j)`.
pub fn lbs_pose(
    model: &SkinModel,
    transforms: &[RigidTransform],
) -> Result<Vec<Vec3>, SkinningError> {
    if transforms.len() != model.bone_count() {
        return Err(SkinningError::BoneCountMismatch {
            expected: model.bone_count(),
            got: transforms.len(),
        });
    }
    let mut out = Vec::with_capacity(model.vertex_count());
    for (vi, p) in model.rest_pose.iter().enumerate() {
        let mut v = Vec3::zeros();
        for e in model.weights(vi) {
            let t = &transforms[e.bone as usize];
            v += e.weight * (t.rotation * p + t.translation);
        }
        out.push(v);
    }
    Ok(out)
}
