//! Truncated-backpropagation training for both networks. Sequences are
//! cut into fixed-length chunks; each chunk gets a fresh tape and one Adam
//! step, and the recurrent state crosses chunk boundaries as a constant.

use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vb_autodiff::{Adam, EdgeIndex, ParameterSet, Tape, Tensor, Var};
use vb_mesh::{Adjacency, AnimSequence};
use vb_sim::{body_surface, BodyMotion, BodySurface};
use vb_skinning::{lbs_pose, BoneTracks, SkinModel};

use crate::config::TrainConfig;
use crate::encode::{laplacian_operator, pose_input, tracks_input};
use crate::hf::HighFreqNet;
use crate::lf::LowFreqNet;
use crate::loss::{hf_frame_loss, lf_frame_loss};
use crate::MotionError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-frame loss after each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(f64::NAN)
    }
}

fn check_lf_data(
    skin: &SkinModel,
    data: &[(BodyMotion, AnimSequence)],
) -> Result<(), MotionError> {
    if data.is_empty() || data.iter().all(|(m, _)| m.frame_count() == 0) {
        return Err(MotionError::EmptyDataset);
    }
    for (motion, target) in data {
        if motion.frame_count() != target.frame_count() {
            return Err(MotionError::FrameCountMismatch {
                motion: motion.frame_count(),
                target: target.frame_count(),
            });
        }
        if target.vertex_count() != skin.vertex_count() {
            return Err(MotionError::VertexCountMismatch {
                sequence: target.vertex_count(),
                rig: skin.vertex_count(),
            });
        }
    }
    Ok(())
}

/// Mean of per-frame scalar losses already on the tape.
fn mean_of(tape: &mut Tape, losses: &[Var]) -> Result<Var, MotionError> {
    let mut total = losses[0];
    for &l in &losses[1..] {
        total = tape.add(total, l)?;
    }
    Ok(tape.scalar_mul(total, 1.0 / losses.len() as f64))
}

/// Trains the low-frequency network against per-frame garment targets
/// (normally the smoothed half of a frequency split).
pub fn train_lf(
    skin: &Rc<SkinModel>,
    adjacency: &Adjacency,
    data: &[(BodyMotion, AnimSequence)],
    config: &TrainConfig,
) -> Result<(ParameterSet, LowFreqNet, TrainReport), MotionError> {
    config.validate()?;
    check_lf_data(skin, data)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ParameterSet::new();
    let net = LowFreqNet::init(&mut params, skin.bone_count(), config.sizes.lf_hidden, &mut rng)?;
    let laplacian = laplacian_operator(adjacency);

    // Frame-wise constants, shared across epochs.
    struct Seq {
        poses: Vec<Tensor>,
        targets: Vec<Tensor>,
        lap_targets: Vec<Tensor>,
    }
    let mut seqs = Vec::with_capacity(data.len());
    for (motion, target) in data {
        let mut pre = Tape::new();
        let mut lap_targets = Vec::with_capacity(target.frame_count());
        let mut targets = Vec::with_capacity(target.frame_count());
        for frame in target.frames() {
            let t = pre.constant(Tensor::from_points(frame));
            let lt = pre.sparse_mul(&laplacian, t)?;
            targets.push(pre.value(t).clone());
            lap_targets.push(pre.value(lt).clone());
        }
        seqs.push(Seq {
            poses: motion.frames().iter().map(|f| Tensor::vector(pose_input(f))).collect(),
            targets,
            lap_targets,
        });
    }

    let mut opt = Adam::new(config.learning_rate);
    let mut report = TrainReport { epoch_losses: Vec::new() };
    let frame_total: usize = seqs.iter().map(|s| s.poses.len()).sum();

    for epoch in 0..config.epochs {
        let mut epoch_sum = 0.0;
        let mut chunk_id = 0;
        for seq in &seqs {
            let mut hidden = net.gru.zero_state();
            let mut start = 0;
            while start < seq.poses.len() {
                let end = (start + config.chunk).min(seq.poses.len());
                let mut tape = Tape::new();
                let vars = params.stage_into(&mut tape);
                let mut h = tape.constant(hidden);
                let mut losses = Vec::with_capacity(end - start);
                for f in start..end {
                    let x = tape.constant(seq.poses[f].clone());
                    let (h2, rots, trans) = net.step(&mut tape, &vars, x, h)?;
                    h = h2;
                    let pred = tape.lbs(skin, rots, trans)?;
                    let target = tape.constant(seq.targets[f].clone());
                    let lap_target = tape.constant(seq.lap_targets[f].clone());
                    losses.push(lf_frame_loss(
                        &mut tape,
                        pred,
                        target,
                        &laplacian,
                        lap_target,
                        config.lambda_laplacian,
                    )?);
                }
                let loss = mean_of(&mut tape, &losses)?;
                let value = tape.value(loss).item();
                if !value.is_finite() {
                    return Err(MotionError::NonFiniteLoss { epoch, chunk: chunk_id });
                }
                tape.backward(loss)?;
                let grads = params.collect_grads(&tape, &vars);
                opt.step(&mut params, &grads)?;
                hidden = tape.value(h).clone();
                epoch_sum += value * (end - start) as f64;
                chunk_id += 1;
                start = end;
            }
        }
        let epoch_loss = epoch_sum / frame_total as f64;
        log::debug!("lf epoch {epoch}: loss {epoch_loss:.6}");
        report.epoch_losses.push(epoch_loss);
    }
    Ok((params, net, report))
}

/// Trains the high-frequency network. Each sample pairs a body motion with
/// reference bone tracks (driving both the recurrent input and the
/// low-frequency mesh via skinning) and the full-detail garment target.
pub fn train_hf(
    skin: &Rc<SkinModel>,
    edges: &EdgeIndex,
    data: &[(BodyMotion, BoneTracks, AnimSequence)],
    config: &TrainConfig,
) -> Result<(ParameterSet, HighFreqNet, TrainReport), MotionError> {
    config.validate()?;
    if data.is_empty() || data.iter().all(|(m, _, _)| m.frame_count() == 0) {
        return Err(MotionError::EmptyDataset);
    }
    for (motion, tracks, target) in data {
        if tracks.bone_count() != skin.bone_count() {
            return Err(MotionError::BoneCountMismatch {
                rig: skin.bone_count(),
                net: tracks.bone_count(),
            });
        }
        if motion.frame_count() != target.frame_count()
            || motion.frame_count() != tracks.frame_count()
        {
            return Err(MotionError::FrameCountMismatch {
                motion: motion.frame_count(),
                target: target.frame_count().min(tracks.frame_count()),
            });
        }
        if target.vertex_count() != skin.vertex_count() {
            return Err(MotionError::VertexCountMismatch {
                sequence: target.vertex_count(),
                rig: skin.vertex_count(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut params = ParameterSet::new();
    let net = HighFreqNet::init(&mut params, skin.bone_count(), &config.sizes, &mut rng)?;

    struct Seq {
        bone_inputs: Vec<Tensor>,
        lf_meshes: Vec<Tensor>,
        targets: Vec<Tensor>,
        bodies: Vec<BodySurface>,
    }
    let mut seqs = Vec::with_capacity(data.len());
    for (motion, tracks, target) in data {
        let frames = motion.frame_count();
        let mut seq = Seq {
            bone_inputs: Vec::with_capacity(frames),
            lf_meshes: Vec::with_capacity(frames),
            targets: Vec::with_capacity(frames),
            bodies: Vec::with_capacity(frames),
        };
        for f in 0..frames {
            seq.bone_inputs.push(Tensor::vector(tracks_input(tracks.frame(f))));
            seq.lf_meshes.push(Tensor::from_points(&lbs_pose(skin, tracks.frame(f))?));
            seq.targets.push(Tensor::from_points(target.frame(f)));
            seq.bodies.push(body_surface(motion, f)?);
        }
        seqs.push(seq);
    }

    let mut opt = Adam::new(config.learning_rate);
    let mut report = TrainReport { epoch_losses: Vec::new() };
    let frame_total: usize = seqs.iter().map(|s| s.targets.len()).sum();

    for epoch in 0..config.epochs {
        let mut epoch_sum = 0.0;
        let mut chunk_id = 0;
        for seq in &seqs {
            let mut hidden = net.gru.zero_state();
            let mut start = 0;
            while start < seq.targets.len() {
                let end = (start + config.chunk).min(seq.targets.len());
                let mut tape = Tape::new();
                let vars = params.stage_into(&mut tape);
                let mut h = tape.constant(hidden);
                let mut losses = Vec::with_capacity(end - start);
                for f in start..end {
                    let x = tape.constant(seq.bone_inputs[f].clone());
                    let lf = tape.constant(seq.lf_meshes[f].clone());
                    let (h2, disp) = net.step(&mut tape, &vars, x, h, lf, edges)?;
                    h = h2;
                    let pred = tape.add(lf, disp)?;
                    let target = tape.constant(seq.targets[f].clone());
                    losses.push(hf_frame_loss(
                        &mut tape,
                        pred,
                        target,
                        &seq.bodies[f],
                        config.lambda_collision,
                    )?);
                }
                let loss = mean_of(&mut tape, &losses)?;
                let value = tape.value(loss).item();
                if !value.is_finite() {
                    return Err(MotionError::NonFiniteLoss { epoch, chunk: chunk_id });
                }
                tape.backward(loss)?;
                let grads = params.collect_grads(&tape, &vars);
                opt.step(&mut params, &grads)?;
                hidden = tape.value(h).clone();
                epoch_sum += value * (end - start) as f64;
                chunk_id += 1;
                start = end;
            }
        }
        let epoch_loss = epoch_sum / frame_total as f64;
        log::debug!("hf epoch {epoch}: loss {epoch_loss:.6}");
        report.epoch_losses.push(epoch_loss);
    }
    Ok((params, net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vb_mesh::{shapes, Vec3};
    use vb_sim::{generate_body_motion, MotionStyle};
    use vb_skinning::{RigidTransform, WeightEntry};

    fn tiny_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            chunk: 6,
            learning_rate: 3e-3,
            sizes: crate::NetSizes::tiny(),
            ..TrainConfig::default()
        }
    }

    fn grid_skin() -> (Rc<SkinModel>, Adjacency, vb_mesh::Mesh) {
        let mesh = shapes::grid(3, 3, 0.1);
        let adjacency = Adjacency::build(&mesh);
        // Two bones blended left to right across the grid.
        let rest = mesh.rest_positions().to_vec();
        let weights = rest
            .iter()
            .map(|p| {
                let t = (p.x / 0.2).clamp(0.0, 1.0);
                vec![
                    WeightEntry { bone: 0, weight: 1.0 - t },
                    WeightEntry { bone: 1, weight: t },
                ]
            })
            .collect();
        let skin = Rc::new(SkinModel::new(rest, weights, 2, 4).unwrap());
        (skin, adjacency, mesh)
    }

    /// Garment frames produced by waving the second bone of the toy rig.
    fn teacher_targets(skin: &SkinModel, frames: usize) -> AnimSequence {
        let seq: Vec<Vec<Vec3>> = (0..frames)
            .map(|f| {
                let angle = 0.4 * (f as f64 * 0.37).sin();
                let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::z_axis(), angle)
                    .into_inner();
                let transforms = vec![
                    RigidTransform::identity(),
                    RigidTransform::from_parts(rot, Vec3::new(0.0, 0.02 * angle, 0.0)),
                ];
                lbs_pose(skin, &transforms).unwrap()
            })
            .collect();
        AnimSequence::new(seq, 30.0).unwrap()
    }

    #[test]
    fn lf_training_overfits_a_toy_rig() {
        let (skin, adjacency, _) = grid_skin();
        let motion = generate_body_motion(21, 18, 30.0, MotionStyle::Sway);
        let target = teacher_targets(&skin, 18);
        let (_, _, report) =
            train_lf(&skin, &adjacency, &[(motion, target)], &tiny_config(60)).unwrap();
        let first = report.epoch_losses[0];
        let last = report.final_loss();
        assert!(last < 0.5 * first, "no progress: {first} -> {last}");
    }

    #[test]
    fn lf_training_is_deterministic() {
        let (skin, adjacency, _) = grid_skin();
        let motion = generate_body_motion(22, 10, 30.0, MotionStyle::Walk);
        let target = teacher_targets(&skin, 10);
        let data = vec![(motion, target)];
        let (a, _, ra) = train_lf(&skin, &adjacency, &data, &tiny_config(4)).unwrap();
        let (b, _, rb) = train_lf(&skin, &adjacency, &data, &tiny_config(4)).unwrap();
        assert_eq!(ra.epoch_losses, rb.epoch_losses);
        for name in a.names() {
            assert_eq!(a.get(name).unwrap().data(), b.get(name).unwrap().data());
        }
    }

    #[test]
    fn hf_training_reduces_loss() {
        let (skin, _, mesh) = grid_skin();
        let frames = 12;
        let motion = generate_body_motion(23, frames, 30.0, MotionStyle::Sway);
        let target = teacher_targets(&skin, frames);
        // Reference tracks: the identity pose; the network must explain the
        // whole deformation as displacement.
        let tracks = BoneTracks::from_frames_unchecked(vec![
            vec![RigidTransform::identity(); 2];
            frames
        ]);
        let edges = EdgeIndex::new(mesh.vertex_count(), &mesh.edges());
        // The toy grid sits inside the body, so the collision term would
        // fight the regression; disable it to test the fit alone.
        let config = TrainConfig {
            lambda_collision: 0.0,
            ..tiny_config(30)
        };
        let (_, _, report) =
            train_hf(&skin, &edges, &[(motion, tracks, target)], &config).unwrap();
        let first = report.epoch_losses[0];
        let last = report.final_loss();
        assert!(last < first, "no progress: {first} -> {last}");
    }

    #[test]
    fn empty_dataset_is_refused() {
        let (skin, adjacency, _) = grid_skin();
        assert!(matches!(
            train_lf(&skin, &adjacency, &[], &tiny_config(1)),
            Err(MotionError::EmptyDataset)
        ));
    }
}
