//! `mirror-depth`: batch front end for mirror plane fitting, depth refinement,
//! evaluation and synthetic data.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{eval, frame, tools, Status};
use crate::config::{RunConfig, THREADS_ENV};

#[derive(Debug, Parser)]
#[command(name = "mirror-depth", version, about = "Mirror-aware depth refinement toolkit")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads. Falls back to the config file, then to MIRROR_DEPTH_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a plane for every mirror instance from its border band.
    FitPlane(frame::FitPlaneArgs),
    /// Rewrite mirror depth from given or estimated planes.
    Refine(frame::RefineArgs),
    /// Depth metrics over a directory of frames.
    EvalDepth(eval::EvalDepthArgs),
    /// Seg-AP and 30°-AP for mirror detections.
    EvalDet(eval::EvalDetArgs),
    /// Build a k-means anchor-normal codebook.
    Anchors(tools::AnchorsArgs),
    /// Render a synthetic corpus.
    Synth(tools::SynthArgs),
    /// Export a depth map as a PLY point cloud.
    Pointcloud(tools::PointcloudArgs),
}

fn thread_count(cli: &Cli, cfg: &RunConfig) -> anyhow::Result<Option<usize>> {
    if let Some(n) = cli.threads.or(cfg.threads) {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| anyhow::anyhow!("{THREADS_ENV} must be a thread count, got {v:?}")),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    let threads = thread_count(&cli, &cfg)?;
    cfg.threads = threads;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    pool.install(|| match &cli.command {
        Command::FitPlane(args) => frame::fit_plane(args, cfg),
        Command::Refine(args) => frame::refine(args, cfg),
        Command::EvalDepth(args) => eval::eval_depth(args, cfg),
        Command::EvalDet(args) => eval::eval_det(args),
        Command::Anchors(args) => tools::anchors(args),
        Command::Synth(args) => tools::synth(args, cfg),
        Command::Pointcloud(args) => tools::pointcloud(args, cfg),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
