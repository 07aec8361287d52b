//! A trained model on disk. A bundle is a directory:
//!
//! ```text
//! bundle/
//!   manifest.json   garment recipe, net sizes, sim params, seed
//!   rig.vbrig       skinning decomposition (no tracks)
//!   lf.vbnn         low-frequency weights
//!   hf.vbnn         high-frequency weights (optional)
//! ```
//!
//! The garment recipe is stored instead of the mesh so a loaded bundle can
//! rebuild the edge graph the high-frequency stage convolves over.

use std::fs;
use std::path::Path;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use vb_autodiff::{EdgeIndex, ParameterSet};
use vb_sim::{GarmentSpec, SimParams};
use vb_skinning::{read_rig, write_rig, BoneTracks, SkinModel};

use crate::config::NetSizes;
use crate::infer::Predictor;
use crate::MotionError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RIG_FILE: &str = "rig.vbrig";
pub const LF_FILE: &str = "lf.vbnn";
pub const HF_FILE: &str = "hf.vbnn";

pub struct ModelBundle {
    pub skin: Rc<SkinModel>,
    pub garment: GarmentSpec,
    pub sizes: NetSizes,
    pub sim_params: SimParams,
    pub seed: u64,
    pub lf: ParameterSet,
    pub hf: Option<ParameterSet>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    bone_count: usize,
    garment: GarmentSpec,
    sizes: NetSizes,
    sim_params: SimParams,
    seed: u64,
    has_hf: bool,
}

impl ModelBundle {
    pub fn save(&self, dir: &Path) -> Result<(), MotionError> {
        fs::create_dir_all(dir).map_err(|e| MotionError::io(dir, e))?;
        let manifest = Manifest {
            bone_count: self.skin.bone_count(),
            garment: self.garment.clone(),
            sizes: self.sizes,
            sim_params: self.sim_params,
            seed: self.seed,
            has_hf: self.hf.is_some(),
        };
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| MotionError::bundle(dir, format!("manifest encoding: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| MotionError::io(&path, e))?;

        write_rig(
            &dir.join(RIG_FILE),
            &self.skin,
            &BoneTracks::from_frames_unchecked(Vec::new()),
        )?;
        self.lf.save(&dir.join(LF_FILE), None)?;
        if let Some(hf) = &self.hf {
            hf.save(&dir.join(HF_FILE), None)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, MotionError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| MotionError::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| MotionError::bundle(dir, format!("bad manifest: {e}")))?;
        manifest.sizes.validate()?;

        let (skin, _) = read_rig(&dir.join(RIG_FILE))?;
        if skin.bone_count() != manifest.bone_count {
            return Err(MotionError::bundle(
                dir,
                format!(
                    "manifest says {} bones, rig has {}",
                    manifest.bone_count,
                    skin.bone_count()
                ),
            ));
        }
        let template = manifest.garment.build()?;
        if template.mesh.vertex_count() != skin.vertex_count() {
            return Err(MotionError::bundle(
                dir,
                format!(
                    "garment recipe yields {} vertices, rig skins {}",
                    template.mesh.vertex_count(),
                    skin.vertex_count()
                ),
            ));
        }

        let (lf, _) = ParameterSet::load(&dir.join(LF_FILE))?;
        let hf = if manifest.has_hf {
            Some(ParameterSet::load(&dir.join(HF_FILE))?.0)
        } else {
            None
        };
        Ok(ModelBundle {
            skin: Rc::new(skin),
            garment: manifest.garment,
            sizes: manifest.sizes,
            sim_params: manifest.sim_params,
            seed: manifest.seed,
            lf,
            hf,
        })
    }

    /// Binds the stored weights into a ready-to-run predictor.
    pub fn predictor(&self) -> Result<Predictor, MotionError> {
        let hf = match &self.hf {
            Some(params) => {
                let template = self.garment.build()?;
                let edges = EdgeIndex::new(
                    template.mesh.vertex_count(),
                    &template.mesh.edges(),
                );
                Some((params.clone(), edges))
            }
            None => None,
        };
        Predictor::new(Rc::clone(&self.skin), &self.sizes, self.lf.clone(), hf)
    }
}
