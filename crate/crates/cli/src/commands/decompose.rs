use clap::Args;
use serde::{Deserialize, Serialize};
use vb_mesh::Adjacency;
use vb_sim::{DatasetManifest, SimParams};
use vb_skinning::{ssdr_decompose, write_rig};

use crate::commands::{
    lf_concat, matching_records, require, SourceSpan, DATASET_MANIFEST, DECOMPOSE_REPORT, RIG_FILE,
};
use crate::config::{parse_params, ProjectConfig};
use crate::error::CliError;
use crate::record::RunRecord;
use crate::seed::stage_seed;

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// Parameter point whose sequences feed the decomposition
    /// (defaults to the config's reference_params).
    #[arg(long, value_parser = parse_params)]
    pub params: Option<SimParams>,
    /// Number of virtual bones.
    #[arg(long)]
    pub bones: Option<usize>,
}

/// What `decompose` writes next to the rig: residual summary plus the
/// frame span each source sequence occupies in the concatenated tracks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub params: SimParams,
    pub bone_count: usize,
    pub residual_rmse: f64,
    pub residual_relative: f64,
    pub iterations: usize,
    pub sources: Vec<SourceSpan>,
}

pub fn run(mut cfg: ProjectConfig, args: DecomposeArgs) -> Result<(), CliError> {
    if let Some(bones) = args.bones {
        cfg.bone_count = bones;
    }
    cfg.validate()?;
    let params = args.params.unwrap_or(cfg.reference_params);

    let manifest_path = cfg.dataset_dir.join(DATASET_MANIFEST);
    require(&manifest_path, "vb simulate")?;
    let manifest = DatasetManifest::read(&manifest_path)?;
    let records = matching_records(&manifest, &params)?;

    let template = manifest.garment.build()?;
    let adjacency = Adjacency::build(&template.mesh);

    let seed = stage_seed(cfg.root_seed, "decompose");
    let mut record = RunRecord::new("decompose", seed, &cfg);
    record.input(&manifest_path)?;
    let concat = lf_concat(
        &cfg.dataset_dir,
        &records,
        &adjacency,
        cfg.smoothing(),
        &mut record,
    )?;

    log::info!(
        "decomposing {} frames x {} vertices into {} bones",
        concat.seq.frame_count(),
        concat.seq.vertex_count(),
        cfg.bone_count
    );
    let result = ssdr_decompose(&concat.seq, cfg.bone_count, &cfg.ssdr_config())?;

    let rig_path = cfg.models_dir.join(RIG_FILE);
    if let Some(parent) = rig_path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    write_rig(&rig_path, &result.skin_model, &result.tracks)?;
    let report = DecomposeReport {
        params,
        bone_count: result.skin_model.bone_count(),
        residual_rmse: result.residual_rmse,
        residual_relative: result.residual_relative,
        iterations: result.iterations,
        sources: concat.spans,
    };
    let report_path = cfg.models_dir.join(DECOMPOSE_REPORT);
    crate::commands::write_json(&report_path, &report)?;

    record.output(&rig_path)?;
    record.output(&report_path)?;
    record.write(&cfg.reports_dir, "decompose")?;

    println!(
        "{} bones: residual {:.3} mm ({:.3}% of bbox diagonal) after {} iterations",
        report.bone_count,
        report.residual_rmse * 1000.0,
        report.residual_relative * 100.0,
        report.iterations
    );
    Ok(())
}
