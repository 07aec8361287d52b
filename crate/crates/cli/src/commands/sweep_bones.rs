use clap::Args;
use serde::Serialize;
use vb_mesh::Adjacency;
use vb_sim::{DatasetManifest, SimParams};
use vb_skinning::ssdr_decompose_nested;

use crate::commands::{lf_concat, matching_records, require, DATASET_MANIFEST};
use crate::config::{parse_params, ProjectConfig};
use crate::error::CliError;
use crate::record::RunRecord;
use crate::seed::stage_seed;

#[derive(Args, Debug)]
pub struct SweepBonesArgs {
    /// Comma-separated bone counts, decomposed smallest first with
    /// nested initialization.
    #[arg(long, default_value = "20,40,80", value_parser = parse_counts)]
    pub bones: Counts,
    /// Parameter point to sweep on (defaults to the config's reference_params).
    #[arg(long, value_parser = parse_params)]
    pub params: Option<SimParams>,
}

#[derive(Debug, Clone)]
pub struct Counts(pub Vec<usize>);

fn parse_counts(s: &str) -> Result<Counts, String> {
    let mut counts = Vec::new();
    for part in s.split(',') {
        let n: usize = part
            .trim()
            .parse()
            .map_err(|_| format!("bad bone count {part:?}"))?;
        if n == 0 {
            return Err("bone counts must be positive".into());
        }
        counts.push(n);
    }
    counts.sort_unstable();
    counts.dedup();
    if counts.is_empty() {
        return Err("need at least one bone count".into());
    }
    Ok(Counts(counts))
}

#[derive(Serialize)]
struct SweepRow {
    bones: usize,
    residual_mm: f64,
    residual_relative: f64,
    iterations: usize,
}

pub fn run(cfg: ProjectConfig, args: SweepBonesArgs) -> Result<(), CliError> {
    cfg.validate()?;
    let params = args.params.unwrap_or(cfg.reference_params);

    let manifest_path = cfg.dataset_dir.join(DATASET_MANIFEST);
    require(&manifest_path, "vb simulate")?;
    let manifest = DatasetManifest::read(&manifest_path)?;
    let records = matching_records(&manifest, &params)?;

    let template = manifest.garment.build()?;
    let adjacency = Adjacency::build(&template.mesh);

    let seed = stage_seed(cfg.root_seed, "sweep-bones");
    let mut record = RunRecord::new("sweep-bones", seed, &cfg);
    record.input(&manifest_path)?;
    let concat = lf_concat(
        &cfg.dataset_dir,
        &records,
        &adjacency,
        cfg.smoothing(),
        &mut record,
    )?;

    log::info!("sweeping bone counts {:?}", args.bones.0);
    let results = ssdr_decompose_nested(&concat.seq, &args.bones.0, &cfg.ssdr_config())?;

    let rows: Vec<SweepRow> = results
        .iter()
        .map(|r| SweepRow {
            bones: r.skin_model.bone_count(),
            residual_mm: r.residual_rmse * 1000.0,
            residual_relative: r.residual_relative,
            iterations: r.iterations,
        })
        .collect();

    println!("bones  residual_mm  relative  iterations");
    for row in &rows {
        println!(
            "{:5}  {:11.3}  {:7.3}%  {:10}",
            row.bones,
            row.residual_mm,
            row.residual_relative * 100.0,
            row.iterations
        );
    }
    for pair in rows.windows(2) {
        if pair[1].residual_mm > pair[0].residual_mm {
            log::warn!(
                "residual rose from {} to {} bones; decomposition may need more iterations",
                pair[0].bones,
                pair[1].bones
            );
        }
    }

    let out_path = cfg.reports_dir.join("sweep_bones.json");
    crate::commands::write_json(&out_path, &rows)?;
    record.output(&out_path)?;
    record.write(&cfg.reports_dir, "sweep-bones")?;
    Ok(())
}
