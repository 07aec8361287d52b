use std::path::PathBuf;

use clap::Args;
use vb_sim::{generate_dataset, DatasetSpec, SimParams};

use crate::config::{parse_params, ProjectConfig};
use crate::error::CliError;
use crate::record::RunRecord;
use crate::seed::stage_seed;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Simulate a single parameter point instead of the whole grid
    /// (bending,density,timescale — e.g. 1e-7,0.04,1.0).
    #[arg(long, value_parser = parse_params)]
    pub params: Option<SimParams>,
    /// Frames per sequence.
    #[arg(long)]
    pub frames: Option<usize>,
    /// XPBD substeps per frame.
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Output directory (defaults to the config's dataset dir).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(mut cfg: ProjectConfig, args: SimulateArgs) -> Result<(), CliError> {
    if let Some(frames) = args.frames {
        cfg.frame_count = frames;
    }
    if let Some(substeps) = args.substeps {
        cfg.substeps = substeps;
    }
    if let Some(out) = args.out {
        cfg.dataset_dir = out;
    }
    cfg.validate()?;

    let params = match args.params {
        Some(p) => vec![p],
        None => cfg.params.clone(),
    };
    let seed = stage_seed(cfg.root_seed, "simulate");
    let spec = DatasetSpec {
        garment: cfg.garment.clone(),
        params,
        styles: cfg.styles.clone(),
        seed,
        frame_count: cfg.frame_count,
        frame_rate: cfg.frame_rate,
        substeps: cfg.substeps,
    };

    log::info!(
        "simulating {} sequences ({} params x {} styles, {} frames each)",
        spec.params.len() * spec.styles.len(),
        spec.params.len(),
        spec.styles.len(),
        spec.frame_count
    );
    let manifest = generate_dataset(&spec, &cfg.dataset_dir)?;

    let mut record = RunRecord::new("simulate", seed, &cfg);
    record.output(&cfg.dataset_dir)?;
    record.write(&cfg.reports_dir, "simulate")?;

    println!(
        "wrote {} sequences to {}",
        manifest.sequences.len(),
        cfg.dataset_dir.display()
    );
    Ok(())
}
