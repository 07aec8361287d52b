use nalgebra::{Matrix3, Vector3};
use vb_mesh::Vec3;

use crate::{RigidTransform, SkinningError};

/// Output of [`weighted_procrustes`]: the best-fit rigid transform and the
/// sum of squared residuals it leaves behind.
#[derive(Debug, Clone, Copy)]
pub struct ProcrustesResult {
    pub transform: RigidTransform,
    pub residual_sq: f64,
}

/// Solves `min_{R,T} Σ_i ‖q_i − w_i (R p_i + T)‖²` over proper rotations.
///
/// The weights sit *inside* the residual (the blend-weight form used when a
/// bone explains a weighted share of each vertex), so `w_i = 1` for all i
/// reduces to the classic absolute-orientation problem.
///
/// With `w̄² = Σ w_i²`, `p̄ = Σ w_i² p_i / w̄²`, `q̄ = Σ w_i q_i / w̄²`, the
/// optimum satisfies `T = q̄ − R p̄`, and R maximizes `tr(R H)` for
/// `H = Σ a_i b_iᵀ`, `a_i = w_i (p_i − p̄)`, `b_i = q_i − w_i q̄` — solved by
/// SVD `H = U S Vᵀ`, `R = V · diag(1, 1, det(VUᵀ)) · Uᵀ`.
///
/// If the total squared weight is (numerically) zero every transform fits
/// equally badly; the identity is returned with the trivial residual.
pub fn weighted_procrustes(
    points: &[Vec3],
    targets: &[Vec3],
    weights: &[f64],
) -> Result<ProcrustesResult, SkinningError> {
    if points.len() != targets.len() || points.len() != weights.len() {
        return Err(SkinningError::VertexCountMismatch {
            expected: points.len(),
            got: targets.len().min(weights.len()),
        });
    }

    let w_sq: f64 = weights.iter().map(|w| w * w).sum();
    if w_sq < 1e-30 {
        let residual_sq = targets.iter().map(|q| q.norm_squared()).sum();
        return Ok(ProcrustesResult {
            transform: RigidTransform::identity(),
            residual_sq,
        });
    }

    let mut p_bar = Vec3::zeros();
    let mut q_bar = Vec3::zeros();
    for ((p, q), &w) in points.iter().zip(targets).zip(weights) {
        p_bar += w * w * p;
        q_bar += w * q;
    }
    p_bar /= w_sq;
    q_bar /= w_sq;

    let mut h = Matrix3::<f64>::zeros();
    for ((p, q), &w) in points.iter().zip(targets).zip(weights) {
        let a = w * (p - p_bar);
        let b = q - w * q_bar;
        h += a * b.transpose();
    }

    let svd = h.svd(true, true);
    let u = svd.u.expect("3x3 SVD requested with U");
    let v = svd.v_t.expect("3x3 SVD requested with V^T").transpose();
    let sign = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign)) * u.transpose();
    let translation = q_bar - rotation * p_bar;

    let transform = RigidTransform::from_parts(rotation, translation);
    let residual_sq = points
        .iter()
        .zip(targets)
        .zip(weights)
        .map(|((p, q), &w)| (q - w * transform.apply(p)).norm_squared())
        .sum();

    Ok(ProcrustesResult {
        transform,
        residual_sq,
    })
}
