//! Inference. Each frame runs on its own throwaway tape (no gradients are
//! ever needed), so memory stays flat no matter how long the motion is and
//! streaming a motion frame by frame matches running it in one batch.

use std::rc::Rc;

use vb_autodiff::{EdgeIndex, ParameterSet, Tape, Tensor};
use vb_mesh::{AnimSequence, Vec3};
use vb_sim::{BodyMotion, MotionFrame};
use vb_skinning::{lbs_pose, RigidTransform, SkinModel};

use crate::config::NetSizes;
use crate::encode::{pose_input, tracks_input};
use crate::hf::HighFreqNet;
use crate::lf::{transforms_from_tensors, LowFreqNet};
use crate::MotionError;

/// Recurrent state carried between frames of one motion.
#[derive(Debug, Clone)]
pub struct InferenceState {
    h_lf: Tensor,
    h_hf: Option<Tensor>,
}

/// Both networks bound to their parameters, ready to run.
pub struct Predictor {
    pub skin: Rc<SkinModel>,
    lf_params: ParameterSet,
    lf_net: LowFreqNet,
    hf: Option<HfStage>,
}

struct HfStage {
    params: ParameterSet,
    net: HighFreqNet,
    edges: EdgeIndex,
}

impl Predictor {
    /// `hf` is optional: without it predictions stop at the skinned
    /// low-frequency mesh.
    pub fn new(
        skin: Rc<SkinModel>,
        sizes: &NetSizes,
        lf_params: ParameterSet,
        hf_params: Option<(ParameterSet, EdgeIndex)>,
    ) -> Result<Self, MotionError> {
        sizes.validate()?;
        let lf_net = LowFreqNet::expect(skin.bone_count(), sizes.lf_hidden);
        let hf = match hf_params {
            Some((params, edges)) => {
                if edges.node_count != skin.vertex_count() {
                    return Err(MotionError::VertexCountMismatch {
                        sequence: edges.node_count,
                        rig: skin.vertex_count(),
                    });
                }
                Some(HfStage {
                    params,
                    net: HighFreqNet::expect(skin.bone_count(), sizes),
                    edges,
                })
            }
            None => None,
        };
        Ok(Predictor {
            skin,
            lf_params,
            lf_net,
            hf,
        })
    }

    pub fn has_hf(&self) -> bool {
        self.hf.is_some()
    }

    pub fn begin(&self) -> InferenceState {
        InferenceState {
            h_lf: self.lf_net.gru.zero_state(),
            h_hf: self.hf.as_ref().map(|s| s.net.gru.zero_state()),
        }
    }

    /// LF half of a step: advances the pose GRU and returns the predicted
    /// bone transforms plus their raw tensors.
    fn step_lf(
        &self,
        state: &mut InferenceState,
        frame: &MotionFrame,
    ) -> Result<(Vec<RigidTransform>, Tensor, Tensor), MotionError> {
        let mut tape = Tape::new();
        let vars = self.lf_params.stage_into(&mut tape);
        let x = tape.constant(Tensor::vector(pose_input(frame)));
        let h = tape.constant(state.h_lf.clone());
        let (h2, rots, trans) = self.lf_net.step(&mut tape, &vars, x, h)?;
        state.h_lf = tape.value(h2).clone();
        let transforms = transforms_from_tensors(tape.value(rots), tape.value(trans));
        Ok((transforms, tape.value(rots).clone(), tape.value(trans).clone()))
    }

    /// Advances one frame and returns the garment vertices.
    pub fn step(
        &self,
        state: &mut InferenceState,
        frame: &MotionFrame,
    ) -> Result<Vec<Vec3>, MotionError> {
        let (transforms, rots, trans) = self.step_lf(state, frame)?;
        let stage = match &self.hf {
            Some(stage) => stage,
            None => return Ok(lbs_pose(&self.skin, &transforms)?),
        };

        // Fresh tape for the high-frequency half; only values cross over.
        let mut tape = Tape::new();
        let vars = stage.params.stage_into(&mut tape);
        let rc = tape.constant(rots);
        let tc = tape.constant(trans);
        let lf_mesh = tape.lbs(&self.skin, rc, tc)?;
        let x = tape.constant(Tensor::vector(tracks_input(&transforms)));
        let h = tape.constant(
            state
                .h_hf
                .clone()
                .unwrap_or_else(|| stage.net.gru.zero_state()),
        );
        let (h2, disp) = stage
            .net
            .step(&mut tape, &vars, x, h, lf_mesh, &stage.edges)?;
        state.h_hf = Some(tape.value(h2).clone());
        let out = tape.add(lf_mesh, disp)?;
        Ok(tape.value(out).to_points())
    }

    /// Runs a whole motion from a fresh state.
    pub fn predict(&self, motion: &BodyMotion) -> Result<AnimSequence, MotionError> {
        let mut state = self.begin();
        let mut frames = Vec::with_capacity(motion.frame_count());
        for frame in motion.frames() {
            frames.push(self.step(&mut state, frame)?);
        }
        Ok(AnimSequence::new(frames, motion.frame_rate())?)
    }

    /// Like [`Predictor::predict`] but stops at the skinned low-frequency
    /// mesh even when a high-frequency stage is loaded.
    pub fn predict_lf_only(&self, motion: &BodyMotion) -> Result<AnimSequence, MotionError> {
        let mut state = self.begin();
        let mut frames = Vec::with_capacity(motion.frame_count());
        for frame in motion.frames() {
            let (transforms, _, _) = self.step_lf(&mut state, frame)?;
            frames.push(lbs_pose(&self.skin, &transforms)?);
        }
        Ok(AnimSequence::new(frames, motion.frame_rate())?)
    }

    /// Predicted bone tracks for a whole motion (no skinning).
    pub fn predict_tracks(&self, motion: &BodyMotion) -> Result<vb_skinning::BoneTracks, MotionError> {
        let mut state = self.begin();
        let mut frames = Vec::with_capacity(motion.frame_count());
        for frame in motion.frames() {
            let (transforms, _, _) = self.step_lf(&mut state, frame)?;
            frames.push(transforms);
        }
        Ok(vb_skinning::BoneTracks::from_frames_unchecked(frames))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use vb_mesh::shapes;
    use vb_sim::{generate_body_motion, MotionStyle};
    use vb_skinning::WeightEntry;

    fn toy_predictor(with_hf: bool) -> Predictor {
        let mesh = shapes::grid(3, 3, 0.1);
        let rest = mesh.rest_positions().to_vec();
        let weights = rest
            .iter()
            .map(|_| vec![WeightEntry { bone: 0, weight: 1.0 }])
            .collect();
        let skin = Rc::new(SkinModel::new(rest, weights, 2, 4).unwrap());
        let sizes = NetSizes::tiny();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut lf_params = ParameterSet::new();
        LowFreqNet::init(&mut lf_params, 2, sizes.lf_hidden, &mut rng).unwrap();
        let hf = if with_hf {
            let mut hf_params = ParameterSet::new();
            HighFreqNet::init(&mut hf_params, 2, &sizes, &mut rng).unwrap();
            Some((hf_params, EdgeIndex::new(mesh.vertex_count(), &mesh.edges())))
        } else {
            None
        };
        Predictor::new(skin, &sizes, lf_params, hf).unwrap()
    }

    #[test]
    fn streaming_matches_batch() {
        let predictor = toy_predictor(true);
        let motion = generate_body_motion(41, 12, 30.0, MotionStyle::Walk);
        let batch = predictor.predict(&motion).unwrap();

        let mut state = predictor.begin();
        for (f, frame) in motion.frames().iter().enumerate() {
            let streamed = predictor.step(&mut state, frame).unwrap();
            for (a, b) in streamed.iter().zip(batch.frame(f)) {
                assert!((a - b).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn lf_only_ignores_hf_stage() {
        let with = toy_predictor(true);
        let without = toy_predictor(false);
        let motion = generate_body_motion(42, 6, 30.0, MotionStyle::Sway);
        let a = with.predict_lf_only(&motion).unwrap();
        let b = without.predict(&motion).unwrap();
        assert_eq!(a, b);
        let full = with.predict(&motion).unwrap();
        assert_ne!(full, a);
    }
}
