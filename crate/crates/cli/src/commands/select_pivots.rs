use clap::Args;
use serde::{Deserialize, Serialize};
use vb_ensemble::select_pivots;
use vb_mesh::AnimSequence;
use vb_sim::{DatasetManifest, SimParams};

use crate::commands::{
    distinct_params, fmt_params, params_key, require, write_json, DATASET_MANIFEST, PIVOTS_FILE,
};
use crate::config::ProjectConfig;
use crate::error::CliError;
use crate::record::RunRecord;
use crate::seed::stage_seed;

#[derive(Args, Debug)]
pub struct SelectPivotsArgs {
    /// Number of pivots to keep.
    #[arg(long)]
    pub count: Option<usize>,
}

/// Output of `select-pivots`: the chosen parameter points, plus every
/// candidate for reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PivotsFile {
    pub pivots: Vec<SimParams>,
    pub candidates: Vec<SimParams>,
}

pub fn run(mut cfg: ProjectConfig, args: SelectPivotsArgs) -> Result<(), CliError> {
    if let Some(count) = args.count {
        cfg.pivot_count = count;
    }
    cfg.validate()?;

    let manifest_path = cfg.dataset_dir.join(DATASET_MANIFEST);
    require(&manifest_path, "vb simulate")?;
    let manifest = DatasetManifest::read(&manifest_path)?;

    let seed = stage_seed(cfg.root_seed, "select-pivots");
    let mut record = RunRecord::new("select-pivots", seed, &cfg);
    record.input(&manifest_path)?;

    // One candidate per distinct parameter point: all of its sequences
    // (styles) concatenated, so selection sees the full motion range.
    let grid = distinct_params(&manifest);
    let mut candidates: Vec<(SimParams, AnimSequence)> = Vec::with_capacity(grid.len());
    for p in &grid {
        let key = params_key(p);
        let mut parts = Vec::new();
        for r in &manifest.sequences {
            if params_key(&r.params) == key {
                let path = cfg.dataset_dir.join(&r.sequence_path);
                record.input(&path)?;
                parts.push(vb_mesh::read_sequence(&path)?);
            }
        }
        let refs: Vec<&AnimSequence> = parts.iter().collect();
        candidates.push((*p, AnimSequence::concat(&refs)?));
    }

    if cfg.pivot_count > candidates.len() {
        return Err(CliError::Config(format!(
            "asked for {} pivots but the dataset has only {} distinct parameter points",
            cfg.pivot_count,
            candidates.len()
        )));
    }
    let chosen = select_pivots(&candidates, cfg.pivot_count)?;
    let pivots = PivotsFile {
        pivots: chosen.iter().map(|&i| candidates[i].0).collect(),
        candidates: grid,
    };

    let out_path = cfg.models_dir.join(PIVOTS_FILE);
    write_json(&out_path, &pivots)?;
    record.output(&out_path)?;
    record.write(&cfg.reports_dir, "select-pivots")?;

    println!("selected {} pivots:", pivots.pivots.len());
    for p in &pivots.pivots {
        println!("  {}", fmt_params(p));
    }
    Ok(())
}
