use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use log::info;

use fwfc::pipeline::{evaluate_dirs, run_pipeline, RunOptions};
use fwfc::Config;

#[derive(Parser)]
#[command(name = "fwfc", version, about = "Wavelet-domain foreground detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect foreground in a frame directory (or a directory of videos).
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Ground-truth masks, laid out like the input.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// `key = value` configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Decomposition depth; overrides the config file.
        #[arg(long)]
        levels: Option<usize>,
        /// Image-domain mixture model without the wavelet transform.
        #[arg(long, conflicts_with = "levels")]
        baseline: bool,
        /// Metrics CSV; needs --gt.
        #[arg(long, requires = "gt")]
        report: Option<PathBuf>,
        /// Write every coefficient plane of every frame as PNG here.
        #[arg(long)]
        dump_bands: Option<PathBuf>,
        /// Resume from this file if it exists and save to it afterwards.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Glob for frame file names.
        #[arg(long, default_value = "*")]
        pattern: String,
    },
    /// Score predicted masks against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            input,
            output,
            gt,
            config,
            levels,
            baseline,
            report,
            dump_bands,
            checkpoint,
            pattern,
        } => {
            let mut cfg = match &config {
                Some(path) => Config::load(path)
                    .with_context(|| format!("loading config {}", path.display()))?,
                None => Config::default(),
            };
            if let Some(n) = levels {
                if n == 0 {
                    bail!("--levels must be positive; use --baseline for the image-domain model");
                }
                cfg.levels = n;
            }
            if baseline {
                cfg.levels = 0;
            }
            cfg.validate().context("invalid configuration")?;
            let opts = RunOptions {
                input,
                output,
                gt,
                pattern,
                report,
                dump_bands,
                checkpoint,
            };
            let summary = run_pipeline(&cfg, &opts)?;
            let frames: usize = summary.videos.iter().map(|v| v.frames).sum();
            info!("processed {frames} frames in {} video(s)", summary.videos.len());
            if let Some(r) = summary.report {
                print!("{}", r.to_csv());
            }
        }
        Command::Eval { pred, gt, report } => {
            let r = evaluate_dirs(&pred, &gt)?;
            r.write_csv(&report)
                .with_context(|| format!("writing {}", report.display()))?;
            print!("{}", r.to_csv());
        }
    }
    Ok(())
}
