//! `vb` — virtual-bone garment pipeline driver.
//!
//! Subcommands cover the whole experiment loop: `simulate` a dataset,
//! `decompose` it into virtual bones, `train-lf` / `train-hf` the motion
//! networks, `select-pivots` + `fit-kernel` for the parameter ensemble,
//! then `infer`, `eval`, and `sweep-bones`. Configuration comes from one
//! JSON file (`--config`) with flag overrides; log verbosity follows
//! `RUST_LOG`. Exit codes: 0 ok, 2 config error, 3 numerical failure.

mod commands;
mod config;
mod error;
mod record;
mod seed;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ProjectConfig;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "vb", version, about = "Virtual-bone garment prediction pipeline")]
struct Cli {
    /// Project config JSON; omitted means built-in desk-scale defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Root seed override; every stage derives its own seed from this.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    dataset_dir: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    models_dir: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    reports_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the garment over the parameter grid and write a dataset.
    Simulate(commands::simulate::SimulateArgs),
    /// Extract a virtual-bone rig from simulated sequences.
    Decompose(commands::decompose::DecomposeArgs),
    /// Train the low-frequency module at one parameter point.
    TrainLf(commands::train_lf::TrainLfArgs),
    /// Add the high-frequency module to a trained bundle.
    TrainHf(commands::train_hf::TrainHfArgs),
    /// Pick pivot parameter points from the dataset.
    SelectPivots(commands::select_pivots::SelectPivotsArgs),
    /// Calibrate the RBF blending kernel over trained pivot bundles.
    FitKernel(commands::fit_kernel::FitKernelArgs),
    /// Predict a garment sequence for a body motion.
    Infer(commands::infer::InferArgs),
    /// Compare a predicted sequence against ground truth.
    Eval(commands::eval::EvalArgs),
    /// Decompose at several bone counts and tabulate the residuals.
    SweepBones(commands::sweep_bones::SweepBonesArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ProjectConfig::load(path)?,
        None => ProjectConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.root_seed = seed;
    }
    if let Some(dir) = cli.dataset_dir {
        cfg.dataset_dir = dir;
    }
    if let Some(dir) = cli.models_dir {
        cfg.models_dir = dir;
    }
    if let Some(dir) = cli.reports_dir {
        cfg.reports_dir = dir;
    }

    match cli.command {
        Command::Simulate(args) => commands::simulate::run(cfg, args),
        Command::Decompose(args) => commands::decompose::run(cfg, args),
        Command::TrainLf(args) => commands::train_lf::run(cfg, args),
        Command::TrainHf(args) => commands::train_hf::run(cfg, args),
        Command::SelectPivots(args) => commands::select_pivots::run(cfg, args),
        Command::FitKernel(args) => commands::fit_kernel::run(cfg, args),
        Command::Infer(args) => commands::infer::run(cfg, args),
        Command::Eval(args) => commands::eval::run(cfg, args),
        Command::SweepBones(args) => commands::sweep_bones::run(cfg, args),
    }
}
