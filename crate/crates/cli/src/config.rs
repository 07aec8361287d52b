use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vb_ensemble::KernelFitConfig;
use vb_mesh::SmoothingConfig;
use vb_motion::{NetSizes, TrainConfig};
use vb_sim::{GarmentSpec, MotionStyle, SimParams};
use vb_skinning::SsdrConfig;

use crate::error::CliError;

/// Everything the pipeline reads, with desk-scale defaults. Loaded from
/// one JSON file; any field may be omitted (the default fills in) and
/// unknown fields are rejected. Command-line flags override the loaded
/// values — flags win.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub dataset_dir: PathBuf,
    pub models_dir: PathBuf,
    pub reports_dir: PathBuf,
    /// Root of all stage seeds; see the `seed` module for the derivation.
    pub root_seed: u64,
    pub garment: GarmentSpec,
    /// Simulation-parameter grid covered by `simulate`.
    pub params: Vec<SimParams>,
    /// Parameter point used by `decompose` / `train-lf` / `train-hf`
    /// when `--params` is not given.
    pub reference_params: SimParams,
    pub styles: Vec<MotionStyle>,
    pub frame_count: usize,
    pub frame_rate: f64,
    pub substeps: usize,
    pub bone_count: usize,
    /// Max skin weights per vertex (|K| in the decomposition).
    pub sparseness: usize,
    pub ssdr_iters: usize,
    pub ssdr_tolerance: f64,
    pub smooth_iterations: usize,
    pub smooth_step: f64,
    pub sizes: NetSizes,
    pub lambda_laplacian: f64,
    pub lambda_collision: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub chunk: usize,
    pub pivot_count: usize,
    pub kernel_hidden: usize,
    pub kernel_epochs: usize,
    pub kernel_learning_rate: f64,
    /// Fixed kernel bandwidth; `null` means the median-distance heuristic.
    pub kernel_sigma: Option<f64>,
    pub sted_coupling: f64,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let ssdr = SsdrConfig::default();
        let smoothing = SmoothingConfig::default();
        let kernel = KernelFitConfig::default();
        ProjectConfig {
            dataset_dir: PathBuf::from("out/dataset"),
            models_dir: PathBuf::from("out/models"),
            reports_dir: PathBuf::from("out/reports"),
            root_seed: 7,
            garment: GarmentSpec::skirt_default(),
            params: SimParams::dataset_grid(),
            reference_params: SimParams::default(),
            styles: vec![MotionStyle::Sway, MotionStyle::Spin, MotionStyle::Walk],
            frame_count: 300,
            frame_rate: 30.0,
            substeps: 12,
            bone_count: 80,
            sparseness: ssdr.sparseness,
            ssdr_iters: ssdr.max_iters,
            ssdr_tolerance: ssdr.tolerance,
            smooth_iterations: smoothing.iterations,
            smooth_step: smoothing.step,
            sizes: NetSizes::default(),
            lambda_laplacian: train.lambda_laplacian,
            lambda_collision: train.lambda_collision,
            learning_rate: train.learning_rate,
            epochs: train.epochs,
            chunk: train.chunk,
            pivot_count: 8,
            kernel_hidden: kernel.hidden,
            kernel_epochs: kernel.epochs,
            kernel_learning_rate: kernel.learning_rate,
            kernel_sigma: None,
            sted_coupling: vb_metrics::DEFAULT_COUPLING,
        }
    }
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.params.is_empty() {
            return bad("params grid is empty".into());
        }
        for p in self.params.iter().chain([&self.reference_params]) {
            p.validate()?;
        }
        if self.styles.is_empty() {
            return bad("styles list is empty".into());
        }
        if self.frame_count < 2 {
            return bad(format!("frame_count {} must be at least 2", self.frame_count));
        }
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return bad(format!("frame_rate {} must be positive", self.frame_rate));
        }
        if self.substeps == 0 {
            return bad("substeps must be at least 1".into());
        }
        if self.bone_count == 0 {
            return bad("bone_count must be at least 1".into());
        }
        if self.sparseness == 0 {
            return bad("sparseness must be at least 1".into());
        }
        if self.ssdr_iters == 0 || self.epochs == 0 || self.kernel_epochs == 0 {
            return bad("iteration/epoch counts must be at least 1".into());
        }
        if self.chunk == 0 {
            return bad("chunk must be at least 1".into());
        }
        if !(self.smooth_step > 0.0 && self.smooth_step <= 1.0) {
            return bad(format!("smooth_step {} must lie in (0, 1]", self.smooth_step));
        }
        if self.pivot_count == 0 {
            return bad("pivot_count must be at least 1".into());
        }
        if let Some(s) = self.kernel_sigma {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("kernel_sigma {s} must be positive"));
            }
        }
        self.sizes.validate()?;
        self.train_config(0).validate()?;
        Ok(())
    }

    pub fn smoothing(&self) -> SmoothingConfig {
        SmoothingConfig {
            iterations: self.smooth_iterations,
            step: self.smooth_step,
        }
    }

    pub fn ssdr_config(&self) -> SsdrConfig {
        SsdrConfig {
            sparseness: self.sparseness,
            max_iters: self.ssdr_iters,
            tolerance: self.ssdr_tolerance,
            ..SsdrConfig::default()
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lambda_laplacian: self.lambda_laplacian,
            lambda_collision: self.lambda_collision,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            chunk: self.chunk,
            seed,
            sizes: self.sizes,
        }
    }

    pub fn kernel_config(&self, seed: u64) -> KernelFitConfig {
        KernelFitConfig {
            hidden: self.kernel_hidden,
            epochs: self.kernel_epochs,
            learning_rate: self.kernel_learning_rate,
            seed,
            sigma: self.kernel_sigma,
        }
    }
}

/// Parses `--params` values like `1e-7,0.04,1.0` (bending stiffness,
/// mass density, timescale).
pub fn parse_params(s: &str) -> Result<SimParams, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected bending,density,timescale (e.g. 1e-7,0.04,1.0), got {s:?}"
        ));
    }
    let num = |part: &str, what: &str| {
        part.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad {what} {part:?}"))
    };
    let params = SimParams {
        bending_stiffness: num(parts[0], "bending stiffness")?,
        mass_density: num(parts[1], "mass density")?,
        timescale: num(parts[2], "timescale")?,
    };
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

/// Parses `--style` values (case-insensitive style names).
pub fn parse_style(s: &str) -> Result<MotionStyle, String> {
    match s.to_ascii_lowercase().as_str() {
        "sway" => Ok(MotionStyle::Sway),
        "spin" => Ok(MotionStyle::Spin),
        "walk" => Ok(MotionStyle::Walk),
        _ => Err(format!("unknown style {s:?} (expected sway, spin, or walk)")),
    }
}
