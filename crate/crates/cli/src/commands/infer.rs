use std::path::PathBuf;

use clap::Args;
use vb_ensemble::PivotBank;
use vb_motion::ModelBundle;
use vb_sim::{generate_body_motion, read_motion, MotionStyle, SimParams};

use crate::commands::{fmt_params, require};
use crate::config::{parse_params, parse_style, ProjectConfig};
use crate::error::CliError;
use crate::record::RunRecord;
use crate::seed::stage_seed;

#[derive(Args, Debug)]
pub struct InferArgs {
    /// Predict with a single trained bundle.
    #[arg(long, value_name = "DIR", conflicts_with = "bank")]
    pub bundle: Option<PathBuf>,
    /// Predict with a calibrated pivot bank (requires --params).
    #[arg(long, value_name = "DIR")]
    pub bank: Option<PathBuf>,
    /// Simulation parameters to query the bank at.
    #[arg(long, value_parser = parse_params)]
    pub params: Option<SimParams>,
    /// Body motion file; omitted means a generated motion.
    #[arg(long, value_name = "FILE")]
    pub motion: Option<PathBuf>,
    /// Style of the generated motion.
    #[arg(long, value_parser = parse_style)]
    pub style: Option<MotionStyle>,
    /// Frames of the generated motion.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Seed of the generated motion (defaults to the infer stage seed).
    #[arg(long)]
    pub motion_seed: Option<u64>,
    /// Skip the high-frequency stage even if the bundle has one.
    #[arg(long)]
    pub lf_only: bool,
    /// Output sequence file (defaults to `<reports>/prediction.vbsq`).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run(cfg: ProjectConfig, args: InferArgs) -> Result<(), CliError> {
    cfg.validate()?;
    let seed = stage_seed(cfg.root_seed, "infer");
    let mut record = RunRecord::new("infer", seed, &cfg);

    let motion = match &args.motion {
        Some(path) => {
            record.input(path)?;
            read_motion(path)?
        }
        None => {
            let style = args.style.unwrap_or(MotionStyle::Sway);
            let frames = args.frames.unwrap_or(cfg.frame_count);
            let motion_seed = args.motion_seed.unwrap_or(seed);
            log::info!("generating {frames}-frame {style} motion (seed {motion_seed})");
            generate_body_motion(motion_seed, frames, cfg.frame_rate, style)
        }
    };

    let pred = match (&args.bundle, &args.bank) {
        (Some(bundle_path), None) => {
            require(&bundle_path.join(vb_motion::MANIFEST_FILE), "vb train-lf")?;
            record.input(bundle_path)?;
            let bundle = ModelBundle::load(bundle_path)?;
            let predictor = bundle.predictor()?;
            if args.lf_only {
                predictor.predict_lf_only(&motion)?
            } else {
                predictor.predict(&motion)?
            }
        }
        (None, Some(bank_path)) => {
            if args.lf_only {
                return Err(CliError::Config(
                    "--lf-only applies to --bundle inference only".into(),
                ));
            }
            let query = args.params.ok_or_else(|| {
                CliError::Config("--bank inference needs --params to blend at".into())
            })?;
            require(&bank_path.join(vb_ensemble::BANK_FILE), "vb fit-kernel")?;
            record.input(bank_path)?;
            let bank = PivotBank::load(bank_path)?;
            let weights = bank.weights(&query)?;
            let detail: Vec<String> = bank
                .pivot_params()
                .iter()
                .zip(weights.as_slice())
                .map(|(p, w)| format!("{:.3} ({})", w, fmt_params(p)))
                .collect();
            log::info!("blend weights: {}", detail.join(", "));
            bank.predict(&motion, &query)?
        }
        _ => {
            return Err(CliError::Config(
                "pass exactly one of --bundle or --bank".into(),
            ));
        }
    };

    let out = args
        .out
        .unwrap_or_else(|| cfg.reports_dir.join("prediction.vbsq"));
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    vb_mesh::write_sequence(&out, &pred)?;
    record.output(&out)?;
    record.write(&cfg.reports_dir, "infer")?;

    println!(
        "wrote {} frames x {} vertices to {}",
        pred.frame_count(),
        pred.vertex_count(),
        out.display()
    );
    Ok(())
}
