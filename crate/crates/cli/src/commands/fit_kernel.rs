use std::path::PathBuf;

use clap::Args;
use vb_ensemble::{fit_kernel, CalibrationCase, PivotBank, PivotEntry};
use vb_motion::ModelBundle;
use vb_sim::{read_motion, DatasetManifest, SimParams};

use crate::commands::select_pivots::PivotsFile;
use crate::commands::{
    bundle_dir, fmt_params, params_key, read_json, require, DATASET_MANIFEST, BANK_DIR,
    PIVOTS_FILE,
};
use crate::config::ProjectConfig;
use crate::error::CliError;
use crate::record::RunRecord;
use crate::seed::stage_seed;

#[derive(Args, Debug)]
pub struct FitKernelArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Bank output directory (defaults to `<models>/bank`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(mut cfg: ProjectConfig, args: FitKernelArgs) -> Result<(), CliError> {
    if let Some(epochs) = args.epochs {
        cfg.kernel_epochs = epochs;
    }
    cfg.validate()?;

    let pivots_path = cfg.models_dir.join(PIVOTS_FILE);
    require(&pivots_path, "vb select-pivots")?;
    let pivots: PivotsFile = read_json(&pivots_path)?;

    let manifest_path = cfg.dataset_dir.join(DATASET_MANIFEST);
    require(&manifest_path, "vb simulate")?;
    let manifest = DatasetManifest::read(&manifest_path)?;

    let seed = stage_seed(cfg.root_seed, "fit-kernel");
    let mut record = RunRecord::new("fit-kernel", seed, &cfg);
    record.input(&pivots_path)?;
    record.input(&manifest_path)?;

    // Every pivot needs a trained bundle; name the command that makes one.
    let mut bundles = Vec::with_capacity(pivots.pivots.len());
    for p in &pivots.pivots {
        let dir = bundle_dir(&cfg.models_dir, p);
        require(
            &dir.join(vb_motion::MANIFEST_FILE),
            &format!("vb train-lf --params {}", fmt_params(p)),
        )?;
        record.input(&dir)?;
        bundles.push(ModelBundle::load(&dir)?);
    }

    // Calibration cases: every simulated sequence at a non-pivot
    // parameter point, with each pivot's prediction of its motion.
    let pivot_keys: Vec<[u64; 3]> = pivots.pivots.iter().map(params_key).collect();
    let mut cases: Vec<CalibrationCase> = Vec::new();
    for r in &manifest.sequences {
        if pivot_keys.contains(&params_key(&r.params)) {
            continue;
        }
        let seq_path = cfg.dataset_dir.join(&r.sequence_path);
        let motion_path = cfg.dataset_dir.join(&r.motion_path);
        record.input(&seq_path)?;
        record.input(&motion_path)?;
        let truth = vb_mesh::read_sequence(&seq_path)?;
        let motion = read_motion(&motion_path)?;
        let mut predictions = Vec::with_capacity(bundles.len());
        for bundle in &bundles {
            predictions.push(bundle.predictor()?.predict(&motion)?);
        }
        cases.push(CalibrationCase {
            params: r.params,
            truth,
            pivot_predictions: predictions,
        });
    }
    if cases.is_empty() {
        return Err(CliError::Config(
            "every parameter point in the dataset is a pivot; simulate extra \
             non-pivot points to calibrate against"
                .into(),
        ));
    }

    log::info!(
        "calibrating kernel over {} pivots on {} cases, {} epochs",
        pivots.pivots.len(),
        cases.len(),
        cfg.kernel_epochs
    );
    let pivot_params: Vec<SimParams> = pivots.pivots.clone();
    let (kernel, report) = fit_kernel(&pivot_params, &cases, &cfg.kernel_config(seed))?;

    let entries: Vec<PivotEntry> = pivot_params
        .iter()
        .zip(bundles)
        .map(|(&params, bundle)| PivotEntry { params, bundle })
        .collect();
    let bank = PivotBank::new(entries, kernel)?;
    let bank_path = args.out.unwrap_or_else(|| cfg.models_dir.join(BANK_DIR));
    bank.save(&bank_path)?;
    let report_path = cfg.reports_dir.join("fit-kernel.json");
    crate::commands::write_json(&report_path, &report)?;

    record.output(&bank_path)?;
    record.output(&report_path)?;
    record.write(&cfg.reports_dir, "fit-kernel")?;

    println!(
        "calibrated bank at {} (sigma {:.4} -> {:.4}, final loss {:.6})",
        bank_path.display(),
        report.initial_sigma,
        bank.kernel.sigma(),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}
