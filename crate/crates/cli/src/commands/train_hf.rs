use std::path::PathBuf;

use clap::Args;
use vb_autodiff::EdgeIndex;
use vb_mesh::{frequency_split, Adjacency};
use vb_motion::{train_hf, ModelBundle};
use vb_sim::{read_motion, DatasetManifest, SimParams};
use vb_skinning::{read_rig, ssdr_solve_transforms, BoneTracks, RigidTransform};

use crate::commands::decompose::DecomposeReport;
use crate::commands::{
    bundle_dir, matching_records, params_tag, read_json, require, DATASET_MANIFEST,
    DECOMPOSE_REPORT, RIG_FILE,
};
use crate::config::{parse_params, ProjectConfig};
use crate::error::CliError;
use crate::record::RunRecord;
use crate::seed::stage_seed;

#[derive(Args, Debug)]
pub struct TrainHfArgs {
    /// Parameter point to train at (defaults to the config's reference_params).
    #[arg(long, value_parser = parse_params)]
    pub params: Option<SimParams>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Bundle to extend (defaults to `<models>/bundle_<params>`).
    #[arg(long, value_name = "DIR")]
    pub bundle: Option<PathBuf>,
}

pub fn run(mut cfg: ProjectConfig, args: TrainHfArgs) -> Result<(), CliError> {
    if let Some(epochs) = args.epochs {
        cfg.epochs = epochs;
    }
    cfg.validate()?;
    let params = args.params.unwrap_or(cfg.reference_params);
    let tag = params_tag(&params);

    let bundle_path = args.bundle.unwrap_or_else(|| bundle_dir(&cfg.models_dir, &params));
    require(
        &bundle_path.join(vb_motion::MANIFEST_FILE),
        &format!("vb train-lf --params {}", crate::commands::fmt_params(&params)),
    )?;
    let mut bundle = ModelBundle::load(&bundle_path)?;

    let manifest_path = cfg.dataset_dir.join(DATASET_MANIFEST);
    require(&manifest_path, "vb simulate")?;
    let manifest = DatasetManifest::read(&manifest_path)?;
    let records = matching_records(&manifest, &params)?;

    // Teacher bone tracks: reuse the decomposition's tracks where this
    // sequence fed the decomposition, otherwise refit transforms against
    // the frozen rig weights on the sequence's low-frequency part.
    let rig_path = cfg.models_dir.join(RIG_FILE);
    require(&rig_path, "vb decompose")?;
    let report_path = cfg.models_dir.join(DECOMPOSE_REPORT);
    require(&report_path, "vb decompose")?;
    let (rig_model, rig_tracks) = read_rig(&rig_path)?;
    let decompose: DecomposeReport = read_json(&report_path)?;
    if rig_model.bone_count() != bundle.skin.bone_count() {
        return Err(CliError::Config(format!(
            "rig at {} has {} bones but the bundle was trained with {}; \
             re-run `vb train-lf` after `vb decompose`",
            rig_path.display(),
            rig_model.bone_count(),
            bundle.skin.bone_count()
        )));
    }

    let template = manifest.garment.build()?;
    let adjacency = Adjacency::build(&template.mesh);
    let edges = EdgeIndex::new(template.mesh.vertex_count(), &template.mesh.edges());

    let seed = stage_seed(cfg.root_seed, &format!("train-hf/{tag}"));
    let mut record = RunRecord::new("train-hf", seed, &cfg);
    record.input(&manifest_path)?;
    record.input(&rig_path)?;
    record.input(&report_path)?;
    record.input(&bundle_path)?;

    let smoothing = cfg.smoothing();
    let mut data = Vec::with_capacity(records.len());
    for r in &records {
        let seq_path = cfg.dataset_dir.join(&r.sequence_path);
        let motion_path = cfg.dataset_dir.join(&r.motion_path);
        record.input(&seq_path)?;
        record.input(&motion_path)?;
        let seq = vb_mesh::read_sequence(&seq_path)?;
        let motion = read_motion(&motion_path)?;

        let span = decompose
            .sources
            .iter()
            .find(|s| s.sequence == r.sequence_path);
        let teacher = match span {
            Some(s) => rig_tracks.slice(s.start, s.end),
            None => {
                let low = frequency_split(&seq, &adjacency, smoothing)?.low;
                let identity = BoneTracks::from_frames_unchecked(vec![
                    vec![
                        RigidTransform::identity();
                        bundle.skin.bone_count()
                    ];
                    low.frame_count()
                ]);
                ssdr_solve_transforms(
                    &low,
                    bundle.skin.weight_rows(),
                    &bundle.skin.rest_pose,
                    &identity,
                )?
            }
        };
        data.push((motion, teacher, seq));
    }

    log::info!(
        "training HF on {} sequences, {} epochs",
        data.len(),
        cfg.epochs
    );
    let mut train_config = cfg.train_config(seed);
    train_config.sizes = bundle.sizes;
    let (hf, _, report) = train_hf(&bundle.skin, &edges, &data, &train_config)?;

    bundle.hf = Some(hf);
    bundle.save(&bundle_path)?;
    let report_path = cfg.reports_dir.join(format!("train-hf_{tag}.json"));
    crate::commands::write_json(&report_path, &report)?;

    record.output(&bundle_path)?;
    record.output(&report_path)?;
    record.write(&cfg.reports_dir, &format!("train-hf_{tag}"))?;

    println!(
        "added HF stage to {} (final loss {:.6})",
        bundle_path.display(),
        report.final_loss()
    );
    Ok(())
}
