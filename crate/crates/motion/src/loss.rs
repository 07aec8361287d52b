//! Training losses. Position terms are mean Euclidean distances (not
//! squared), so their scale is meters and the Laplacian/collision weights
//! stay comparable across garments.

use std::rc::Rc;

use vb_autodiff::{AutodiffError, Sparse, Tape, Tensor, Var};
use vb_mesh::AnimSequence;
use vb_sim::{body_surface, BodyMotion, BodySurface};

use crate::MotionError;

/// Mean over rows of the Euclidean norm of a [N,3] difference.
pub fn mean_euclidean(tape: &mut Tape, diff: Var) -> Result<Var, AutodiffError> {
    let sq = tape.mul(diff, diff)?;
    let row = tape.row_sum(sq)?;
    let norms = tape.sqrt_guarded(row);
    Ok(tape.mean(norms))
}

/// Low-frequency loss for one frame: mean vertex distance to the target
/// plus `lambda_lap` times the mean distance between the uniform-Laplacian
/// coordinates of prediction and target.
pub fn lf_frame_loss(
    tape: &mut Tape,
    pred: Var,
    target: Var,
    laplacian: &Rc<Sparse>,
    lap_target: Var,
    lambda_lap: f64,
) -> Result<Var, AutodiffError> {
    let diff = tape.sub(pred, target)?;
    let pos = mean_euclidean(tape, diff)?;
    let lap_pred = tape.sparse_mul(laplacian, pred)?;
    let lap_diff = tape.sub(lap_pred, lap_target)?;
    let lap = mean_euclidean(tape, lap_diff)?;
    let lap = tape.scalar_mul(lap, lambda_lap);
    tape.add(pos, lap)
}

/// Penetration depth of each predicted vertex against the nearest body
/// sample, as a differentiable [V] vector. The nearest-sample pairing is
/// decided from the current forward values and treated as fixed.
pub fn penetration(
    tape: &mut Tape,
    pred: Var,
    body: &BodySurface,
) -> Result<Var, AutodiffError> {
    let points = tape.value(pred).to_points();
    let mut normals = Vec::with_capacity(points.len());
    let mut samples = Vec::with_capacity(points.len());
    for p in &points {
        let k = body.nearest(p);
        normals.push(body.normals[k]);
        samples.push(body.positions[k]);
    }
    let n = tape.constant(Tensor::from_points(&normals));
    let b = tape.constant(Tensor::from_points(&samples));
    // depth_i = max(0, n_k . (b_k - p_i)): positive inside the body.
    let toward = tape.sub(b, pred)?;
    let along = tape.mul(n, toward)?;
    let depth = tape.row_sum(along)?;
    Ok(tape.relu(depth))
}

/// High-frequency loss for one frame: mean vertex distance to the target
/// plus `lambda_collision` times the mean penetration depth. An empty body
/// sampling drops the collision term.
pub fn hf_frame_loss(
    tape: &mut Tape,
    pred: Var,
    target: Var,
    body: &BodySurface,
    lambda_collision: f64,
) -> Result<Var, AutodiffError> {
    let diff = tape.sub(pred, target)?;
    let pos = mean_euclidean(tape, diff)?;
    if body.is_empty() {
        log::warn!("empty body sampling; collision term skipped");
        return Ok(pos);
    }
    let depth = penetration(tape, pred, body)?;
    let coll = tape.mean(depth);
    let coll = tape.scalar_mul(coll, lambda_collision);
    tape.add(pos, coll)
}

/// Mean penetration depth of a garment sequence against the posed body,
/// averaged over vertices and frames. Purely diagnostic (no gradients).
pub fn collision_energy(seq: &AnimSequence, motion: &BodyMotion) -> Result<f64, MotionError> {
    if seq.frame_count() != motion.frame_count() {
        return Err(MotionError::FrameCountMismatch {
            motion: motion.frame_count(),
            target: seq.frame_count(),
        });
    }
    if seq.frame_count() == 0 || seq.vertex_count() == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for f in 0..seq.frame_count() {
        let body = body_surface(motion, f)?;
        if body.is_empty() {
            continue;
        }
        let mut frame_sum = 0.0;
        for p in seq.frame(f) {
            let k = body.nearest(p);
            let depth = body.normals[k].dot(&(body.positions[k] - p));
            frame_sum += depth.max(0.0);
        }
        total += frame_sum / seq.vertex_count() as f64;
    }
    Ok(total / seq.frame_count() as f64)
}
