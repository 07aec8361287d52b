use std::path::PathBuf;
use std::rc::Rc;

use clap::Args;
use vb_mesh::{frequency_split, Adjacency};
use vb_motion::{train_lf, ModelBundle};
use vb_sim::{read_motion, DatasetManifest, SimParams};
use vb_skinning::read_rig;

use crate::commands::{
    bundle_dir, matching_records, params_tag, require, DATASET_MANIFEST, RIG_FILE,
};
use crate::config::{parse_params, ProjectConfig};
use crate::error::CliError;
use crate::record::RunRecord;
use crate::seed::stage_seed;

#[derive(Args, Debug)]
pub struct TrainLfArgs {
    /// Parameter point to train at (defaults to the config's reference_params).
    #[arg(long, value_parser = parse_params)]
    pub params: Option<SimParams>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Bundle output directory (defaults to `<models>/bundle_<params>`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(mut cfg: ProjectConfig, args: TrainLfArgs) -> Result<(), CliError> {
    if let Some(epochs) = args.epochs {
        cfg.epochs = epochs;
    }
    cfg.validate()?;
    let params = args.params.unwrap_or(cfg.reference_params);
    let tag = params_tag(&params);

    let manifest_path = cfg.dataset_dir.join(DATASET_MANIFEST);
    require(&manifest_path, "vb simulate")?;
    let manifest = DatasetManifest::read(&manifest_path)?;
    let records = matching_records(&manifest, &params)?;

    let rig_path = cfg.models_dir.join(RIG_FILE);
    require(&rig_path, "vb decompose")?;
    let (model, _) = read_rig(&rig_path)?;

    let template = manifest.garment.build()?;
    if model.vertex_count() != template.mesh.vertex_count() {
        return Err(CliError::Config(format!(
            "rig has {} vertices but the dataset garment has {}; re-run `vb decompose` \
             on this dataset",
            model.vertex_count(),
            template.mesh.vertex_count()
        )));
    }
    let adjacency = Adjacency::build(&template.mesh);

    let seed = stage_seed(cfg.root_seed, &format!("train-lf/{tag}"));
    let mut record = RunRecord::new("train-lf", seed, &cfg);
    record.input(&manifest_path)?;
    record.input(&rig_path)?;

    let smoothing = cfg.smoothing();
    let mut data = Vec::with_capacity(records.len());
    let mut total_frames = 0;
    for r in &records {
        let seq_path = cfg.dataset_dir.join(&r.sequence_path);
        let motion_path = cfg.dataset_dir.join(&r.motion_path);
        record.input(&seq_path)?;
        record.input(&motion_path)?;
        let seq = vb_mesh::read_sequence(&seq_path)?;
        let motion = read_motion(&motion_path)?;
        total_frames += seq.frame_count();
        let split = frequency_split(&seq, &adjacency, smoothing)?;
        data.push((motion, split.low));
    }

    log::info!(
        "training LF head over {} bones on {} sequences ({} frames), {} epochs",
        model.bone_count(),
        data.len(),
        total_frames,
        cfg.epochs
    );
    let skin = Rc::new(model);
    let train_config = cfg.train_config(seed);
    let (lf, _, report) = train_lf(&skin, &adjacency, &data, &train_config)?;

    let bundle = ModelBundle {
        skin,
        garment: manifest.garment.clone(),
        sizes: train_config.sizes,
        sim_params: params,
        seed,
        lf,
        hf: None,
    };
    let out_dir = args.out.unwrap_or_else(|| bundle_dir(&cfg.models_dir, &params));
    bundle.save(&out_dir)?;
    let report_path = cfg.reports_dir.join(format!("train-lf_{tag}.json"));
    crate::commands::write_json(&report_path, &report)?;

    record.output(&out_dir)?;
    record.output(&report_path)?;
    record.write(&cfg.reports_dir, &format!("train-lf_{tag}"))?;

    println!(
        "trained LF bundle at {} (final loss {:.6})",
        out_dir.display(),
        report.final_loss()
    );
    Ok(())
}
