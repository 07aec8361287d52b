//! Low-frequency network: body pose → GRU → linear head → per-bone
//! rotation (6D, orthonormalized) + translation, skinned through LBS.

use std::rc::Rc;

use nalgebra::Matrix3;
use rand::Rng;
use vb_autodiff::{Dense, GruCell, ParameterSet, Tape, Tensor, Var, VarMap};
use vb_mesh::Vec3;
use vb_sim::BodyMotion;
use vb_skinning::{BoneTracks, RigidTransform, SkinModel};

use crate::encode::{pose_input, POSE_INPUT_DIM};
use crate::MotionError;

pub struct LowFreqNet {
    pub gru: GruCell,
    pub head: Dense,
    pub bone_count: usize,
    rot_index: Rc<Vec<usize>>,
    trans_index: Rc<Vec<usize>>,
}

impl LowFreqNet {
    pub fn init(
        params: &mut ParameterSet,
        bone_count: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, MotionError> {
        let gru = GruCell::init(params, "lf.gru", POSE_INPUT_DIM, hidden, rng)?;
        let head = Dense::init(params, "lf.head", hidden, bone_count * 9, rng)?;
        Ok(Self::bind(gru, head, bone_count))
    }

    /// Binds to a parameter set that already holds `lf.*` entries.
    pub fn expect(bone_count: usize, hidden: usize) -> Self {
        let gru = GruCell::expect("lf.gru", POSE_INPUT_DIM, hidden);
        let head = Dense::expect("lf.head", hidden, bone_count * 9);
        Self::bind(gru, head, bone_count)
    }

    fn bind(gru: GruCell, head: Dense, bone_count: usize) -> Self {
        // Head layout per bone: 6 rotation scalars then 3 translation.
        let mut rot_index = Vec::with_capacity(bone_count * 6);
        let mut trans_index = Vec::with_capacity(bone_count * 3);
        for b in 0..bone_count {
            rot_index.extend((0..6).map(|k| b * 9 + k));
            trans_index.extend((6..9).map(|k| b * 9 + k));
        }
        LowFreqNet {
            gru,
            head,
            bone_count,
            rot_index: Rc::new(rot_index),
            trans_index: Rc::new(trans_index),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.gru.hidden_size
    }

    /// One recurrent step. Returns (new hidden, rotations [B,9],
    /// translations [B,3]).
    pub fn step(
        &self,
        tape: &mut Tape,
        vars: &VarMap,
        input: Var,
        hidden: Var,
    ) -> Result<(Var, Var, Var), MotionError> {
        let h = self.gru.forward(tape, vars, input, hidden)?;
        let out = self.head.forward_vec(tape, vars, h)?;
        let six = tape.gather_elems(out, Rc::clone(&self.rot_index), &[self.bone_count, 6])?;
        let rots = tape.rot6d(six)?;
        let trans =
            tape.gather_elems(out, Rc::clone(&self.trans_index), &[self.bone_count, 3])?;
        Ok((h, rots, trans))
    }
}

/// Reads one frame of transforms out of evaluated rotation/translation
/// tensors.
pub(crate) fn transforms_from_tensors(rots: &Tensor, trans: &Tensor) -> Vec<RigidTransform> {
    let b = rots.rows();
    (0..b)
        .map(|k| {
            let r = Matrix3::from_row_slice(&rots.data()[k * 9..(k + 1) * 9]);
            let t = &trans.data()[k * 3..(k + 1) * 3];
            RigidTransform::from_parts(r, Vec3::new(t[0], t[1], t[2]))
        })
        .collect()
}

/// Runs the network over a whole motion, returning bone tracks and the
/// final hidden state. Hidden state starts at zero.
pub fn lf_forward(
    params: &ParameterSet,
    net: &LowFreqNet,
    skin: &SkinModel,
    motion: &BodyMotion,
) -> Result<(BoneTracks, Tensor), MotionError> {
    if skin.bone_count() != net.bone_count {
        return Err(MotionError::BoneCountMismatch {
            rig: skin.bone_count(),
            net: net.bone_count,
        });
    }
    let mut hidden = net.gru.zero_state();
    let mut frames = Vec::with_capacity(motion.frame_count());
    for frame in motion.frames() {
        let mut tape = Tape::new();
        let vars = params.stage_into(&mut tape);
        let x = tape.constant(Tensor::vector(pose_input(frame)));
        let h = tape.constant(hidden);
        let (h2, rots, trans) = net.step(&mut tape, &vars, x, h)?;
        frames.push(transforms_from_tensors(tape.value(rots), tape.value(trans)));
        hidden = tape.value(h2).clone();
    }
    Ok((BoneTracks::from_frames_unchecked(frames), hidden))
}
