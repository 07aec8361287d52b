use std::path::PathBuf;

use clap::Args;
use vb_metrics::{evaluate, write_map_csv};

use crate::config::ProjectConfig;
use crate::error::CliError;
use crate::record::RunRecord;
use crate::seed::stage_seed;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Predicted sequence (.vbsq).
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    /// Ground-truth sequence (.vbsq).
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,
    /// Report output (defaults to `<reports>/eval.json`).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also write the per-vertex mean error map as CSV.
    #[arg(long, value_name = "FILE")]
    pub map_out: Option<PathBuf>,
}

pub fn run(cfg: ProjectConfig, args: EvalArgs) -> Result<(), CliError> {
    cfg.validate()?;
    let seed = stage_seed(cfg.root_seed, "eval");
    let mut record = RunRecord::new("eval", seed, &cfg);
    record.input(&args.pred)?;
    record.input(&args.truth)?;

    let pred = vb_mesh::read_sequence(&args.pred)?;
    let truth = vb_mesh::read_sequence(&args.truth)?;

    // Edge topology for STED comes from the configured garment.
    let template = cfg.garment.build()?;
    if template.mesh.vertex_count() != truth.vertex_count() {
        return Err(CliError::Config(format!(
            "config garment has {} vertices but the sequences have {}; point the \
             config at the garment these sequences were simulated with",
            template.mesh.vertex_count(),
            truth.vertex_count()
        )));
    }
    let edges = template.mesh.edges();
    let report = evaluate(&pred, &truth, &edges, cfg.sted_coupling)?;

    let out = args.out.unwrap_or_else(|| cfg.reports_dir.join("eval.json"));
    crate::commands::write_json(&out, &report)?;
    record.output(&out)?;
    if let Some(map_path) = &args.map_out {
        write_map_csv(map_path, &report.per_vertex_mean_error_mm)?;
        record.output(map_path)?;
    }
    record.write(&cfg.reports_dir, "eval")?;

    println!("metric       value");
    println!("rmse       {:9.3} mm", report.rmse_mm);
    println!("hausdorff  {:9.3} mm", report.hausdorff_mm);
    println!(
        "sted       {:9.5}  (spatial {:.5}, temporal {:.5})",
        report.sted, report.sted_spatial, report.sted_temporal
    );
    Ok(())
}
