//! A pivot bank on disk: one trained bundle per pivot parameter point
//! plus the calibrated kernel.
//!
//! ```text
//! bank/
//!   bank.json      pivot parameter list, standardization, kernel shape
//!   kernel.vbnn    kernel weights (latent map + log σ)
//!   pivot_0/ …     one model bundle per pivot
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vb_autodiff::ParameterSet;
use vb_mesh::AnimSequence;
use vb_motion::ModelBundle;
use vb_sim::{BodyMotion, SimParams};

use crate::blend::{blend_sequences, BlendWeights};
use crate::kernel::{Kernel, Standardization};
use crate::EnsembleError;

pub const BANK_FILE: &str = "bank.json";
pub const KERNEL_FILE: &str = "kernel.vbnn";

pub struct PivotEntry {
    pub params: SimParams,
    pub bundle: ModelBundle,
}

pub struct PivotBank {
    pub pivots: Vec<PivotEntry>,
    pub kernel: Kernel,
}

#[derive(Serialize, Deserialize)]
struct PivotRecord {
    params: SimParams,
    path: String,
}

#[derive(Serialize, Deserialize)]
struct BankManifest {
    pivots: Vec<PivotRecord>,
    standardization: Standardization,
    hidden: usize,
}

impl PivotBank {
    pub fn new(pivots: Vec<PivotEntry>, kernel: Kernel) -> Result<Self, EnsembleError> {
        if pivots.is_empty() {
            return Err(EnsembleError::EmptyBank);
        }
        Ok(PivotBank { pivots, kernel })
    }

    pub fn pivot_params(&self) -> Vec<SimParams> {
        self.pivots.iter().map(|p| p.params).collect()
    }

    pub fn weights(&self, query: &SimParams) -> Result<BlendWeights, EnsembleError> {
        self.kernel.weights(&self.pivot_params(), query)
    }

    /// Blended garment prediction for a motion at arbitrary simulation
    /// parameters.
    pub fn predict(
        &self,
        motion: &BodyMotion,
        query: &SimParams,
    ) -> Result<AnimSequence, EnsembleError> {
        let weights = self.weights(query)?;
        let mut predictions = Vec::with_capacity(self.pivots.len());
        for pivot in &self.pivots {
            predictions.push(pivot.bundle.predictor()?.predict(motion)?);
        }
        blend_sequences(&predictions, &weights)
    }

    pub fn save(&self, dir: &Path) -> Result<(), EnsembleError> {
        fs::create_dir_all(dir).map_err(|e| EnsembleError::io(dir, e))?;
        let mut records = Vec::with_capacity(self.pivots.len());
        for (i, pivot) in self.pivots.iter().enumerate() {
            let name = format!("pivot_{i}");
            pivot.bundle.save(&dir.join(&name))?;
            records.push(PivotRecord {
                params: pivot.params,
                path: name,
            });
        }
        let manifest = BankManifest {
            pivots: records,
            standardization: self.kernel.standardization,
            hidden: self.kernel.hidden,
        };
        let path = dir.join(BANK_FILE);
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| EnsembleError::bank(dir, format!("manifest encoding: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| EnsembleError::io(&path, e))?;
        self.kernel.params.save(&dir.join(KERNEL_FILE), None)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, EnsembleError> {
        let path = dir.join(BANK_FILE);
        let text = fs::read_to_string(&path).map_err(|e| EnsembleError::io(&path, e))?;
        let manifest: BankManifest = serde_json::from_str(&text)
            .map_err(|e| EnsembleError::bank(dir, format!("bad manifest: {e}")))?;
        if manifest.pivots.is_empty() {
            return Err(EnsembleError::bank(dir, "no pivots listed"));
        }
        let (params, _) = ParameterSet::load(&dir.join(KERNEL_FILE))?;
        let kernel = Kernel::from_parts(params, manifest.standardization, manifest.hidden);
        let mut pivots = Vec::with_capacity(manifest.pivots.len());
        for record in manifest.pivots {
            let bundle = ModelBundle::load(&dir.join(&record.path))?;
            pivots.push(PivotEntry {
                params: record.params,
                bundle,
            });
        }
        PivotBank::new(pivots, kernel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::rc::Rc;
    use vb_motion::{LowFreqNet, NetSizes};
    use vb_sim::{generate_body_motion, GarmentSpec, MotionStyle};
    use vb_skinning::{SkinModel, WeightEntry};

    fn toy_bundle(seed: u64, params: SimParams) -> PivotEntry {
        let garment = GarmentSpec::Skirt { radial: 6, rows: 3 };
        let template = garment.build().unwrap();
        let rest = template.mesh.rest_positions().to_vec();
        let weights = rest
            .iter()
            .map(|_| vec![WeightEntry { bone: 0, weight: 1.0 }])
            .collect();
        let skin = Rc::new(SkinModel::new(rest, weights, 2, 4).unwrap());
        let sizes = NetSizes::tiny();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lf = ParameterSet::new();
        LowFreqNet::init(&mut lf, 2, sizes.lf_hidden, &mut rng).unwrap();
        PivotEntry {
            params,
            bundle: ModelBundle {
                skin,
                garment,
                sizes,
                sim_params: params,
                seed,
                lf,
                hf: None,
            },
        }
    }

    fn toy_bank() -> PivotBank {
        let p0 = SimParams::new(1e-8, 0.04, 1.0).unwrap();
        let p1 = SimParams::new(1e-6, 0.04, 1.0).unwrap();
        let standardization = Standardization::fit(&[p0, p1]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kernel = Kernel::identity(standardization, 4, 1.0, &mut rng).unwrap();
        PivotBank::new(vec![toy_bundle(10, p0), toy_bundle(11, p1)], kernel).unwrap()
    }

    #[test]
    fn bank_round_trips_and_blends() {
        let bank = toy_bank();
        let dir = tempfile::tempdir().unwrap();
        bank.save(dir.path()).unwrap();
        let loaded = PivotBank::load(dir.path()).unwrap();

        let query = SimParams::new(1e-7, 0.04, 1.0).unwrap();
        let original = bank.weights(&query).unwrap();
        let reloaded = loaded.weights(&query).unwrap();
        assert_eq!(original.as_slice(), reloaded.as_slice());

        let motion = generate_body_motion(50, 3, 30.0, MotionStyle::Sway);
        let blend = loaded.predict(&motion, &query).unwrap();
        assert_eq!(blend.frame_count(), 3);
        assert_eq!(blend.vertex_count(), loaded.pivots[0].bundle.skin.vertex_count());

        // The blend interpolates the two pivot predictions.
        let a = loaded.pivots[0].bundle.predictor().unwrap().predict(&motion).unwrap();
        let b = loaded.pivots[1].bundle.predictor().unwrap().predict(&motion).unwrap();
        let w = reloaded.as_slice();
        let expect = a.frame(1)[0] * w[0] + b.frame(1)[0] * w[1];
        assert!((blend.frame(1)[0] - expect).norm() < 1e-12);
    }

    #[test]
    fn missing_kernel_file_fails_loudly() {
        let bank = toy_bank();
        let dir = tempfile::tempdir().unwrap();
        bank.save(dir.path()).unwrap();
        fs::remove_file(dir.path().join(KERNEL_FILE)).unwrap();
        assert!(PivotBank::load(dir.path()).is_err());
    }
}
