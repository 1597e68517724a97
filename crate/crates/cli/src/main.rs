//! `tbd`: synthesize scenes, run detection, sweep the theory checks and
//! score detections.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tbd_core::{Error, Result};

use crate::config::Config;

#[derive(Parser, Debug)]
#[command(
    name = "tbd",
    version,
    about = "Dynamic-programming track-before-detect"
)]
struct Cli {
    /// Configuration file (sectioned key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed, overrides run.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overrides io.out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 picks automatically.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Override a configuration key, e.g. --set engine.k=20.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene with ground truth.
    Synth,
    /// Run detection on a frame sequence.
    Detect,
    /// Error-rate curves and edge statistics.
    Analyze,
    /// Recall and m-precision of detection masks against truth masks.
    Eval,
}

fn resolve(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::defaults(),
    };
    for pair in &cli.overrides {
        cfg.set_pair(pair)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("run.seed", &seed.to_string())?;
    }
    if let Some(out) = &cli.out {
        cfg.set("io.out", &out.to_string_lossy())?;
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Scene(_) => 2,
        Error::Io { .. } | Error::Format { .. } | Error::Ingest { .. } => 3,
        _ => 4,
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Synth => commands::synth(&cfg),
        Command::Detect => commands::detect(&cfg),
        Command::Analyze => commands::analyze(&cfg),
        Command::Eval => commands::eval(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
