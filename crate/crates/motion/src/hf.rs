//! High-frequency network: bone transforms → GRU → global feature,
//! fused with per-vertex edge-convolution features of the low-frequency
//! mesh into residual displacements.

use rand::Rng;
use vb_autodiff::{edge_conv, Dense, EdgeIndex, GruCell, Mlp, ParameterSet, Tape, Var, VarMap};

use crate::config::NetSizes;
use crate::encode::BONE_INPUT_DIM;
use crate::MotionError;

pub struct HighFreqNet {
    pub gru: GruCell,
    proj: Dense,
    convs: Vec<Mlp>,
    fusion: Mlp,
    pub bone_count: usize,
}

impl HighFreqNet {
    pub fn init(
        params: &mut ParameterSet,
        bone_count: usize,
        sizes: &NetSizes,
        rng: &mut impl Rng,
    ) -> Result<Self, MotionError> {
        let gru = GruCell::init(
            params,
            "hf.gru",
            bone_count * BONE_INPUT_DIM,
            sizes.hf_global_hidden,
            rng,
        )?;
        let proj = Dense::init(
            params,
            "hf.proj",
            sizes.hf_global_hidden,
            sizes.global_feature,
            rng,
        )?;
        let mut convs = Vec::with_capacity(sizes.edgeconv_widths.len());
        let mut chan = 3;
        for (k, &width) in sizes.edgeconv_widths.iter().enumerate() {
            convs.push(Mlp::init(
                params,
                &format!("hf.ec{k}"),
                &[2 * chan, width],
                rng,
            )?);
            chan = width;
        }
        let mut fusion_sizes = vec![chan + sizes.global_feature];
        fusion_sizes.extend_from_slice(&sizes.fusion_hidden);
        fusion_sizes.push(3);
        let fusion = Mlp::init(params, "hf.fusion", &fusion_sizes, rng)?;
        Ok(HighFreqNet {
            gru,
            proj,
            convs,
            fusion,
            bone_count,
        })
    }

    /// Binds to a parameter set that already holds `hf.*` entries.
    pub fn expect(bone_count: usize, sizes: &NetSizes) -> Self {
        let gru = GruCell::expect(
            "hf.gru",
            bone_count * BONE_INPUT_DIM,
            sizes.hf_global_hidden,
        );
        let proj = Dense::expect("hf.proj", sizes.hf_global_hidden, sizes.global_feature);
        let mut convs = Vec::with_capacity(sizes.edgeconv_widths.len());
        let mut chan = 3;
        for (k, &width) in sizes.edgeconv_widths.iter().enumerate() {
            convs.push(Mlp::expect(&format!("hf.ec{k}"), &[2 * chan, width]));
            chan = width;
        }
        let mut fusion_sizes = vec![chan + sizes.global_feature];
        fusion_sizes.extend_from_slice(&sizes.fusion_hidden);
        fusion_sizes.push(3);
        let fusion = Mlp::expect("hf.fusion", &fusion_sizes);
        HighFreqNet {
            gru,
            proj,
            convs,
            fusion,
            bone_count,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.gru.hidden_size
    }

    /// One recurrent step. `bone_input` is the flattened transform frame,
    /// `lf_mesh` the low-frequency garment [V,3]. Returns (new hidden,
    /// per-vertex displacement [V,3]).
    pub fn step(
        &self,
        tape: &mut Tape,
        vars: &VarMap,
        bone_input: Var,
        hidden: Var,
        lf_mesh: Var,
        edges: &EdgeIndex,
    ) -> Result<(Var, Var), MotionError> {
        let h = self.gru.forward(tape, vars, bone_input, hidden)?;
        let global = self.proj.forward_vec(tape, vars, h)?;

        let mut feat = lf_mesh;
        let last = self.convs.len() - 1;
        for (k, conv) in self.convs.iter().enumerate() {
            feat = edge_conv(tape, vars, conv, edges, feat)?;
            if k != last {
                feat = tape.relu(feat);
            }
        }

        let rows = tape.value(feat).rows();
        let global_rows = tape.broadcast_rows(global, rows)?;
        let fused = tape.concat_cols(feat, global_rows)?;
        let disp = self.fusion.forward_rows(tape, vars, fused)?;
        Ok((h, disp))
    }
}
