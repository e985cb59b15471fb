//! Command-line pipeline driver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 missing input artifact,
//! 4 numeric failure, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mtnam::config::PipelineConfig;
use mtnam::pipeline;
use mtnam::Error;

#[derive(Parser)]
#[command(
    name = "mtnam",
    version,
    about = "Seizure detection pipeline: additive model, tree distillation, online adaptation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Pipeline configuration file (section.key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Fail instead of warning when an upstream artifact was produced with
    /// a different config.
    #[arg(long)]
    strict_hash: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic recording and annotations.
    Synth(CommonArgs),
    /// Extract windowed features from the configured recording.
    Extract(CommonArgs),
    /// Grid-search and train the additive model plus LR/DNN baselines.
    Train(CommonArgs),
    /// Distill the trained model into regression trees (one per depth).
    Distill(CommonArgs),
    /// Offline metrics for every trained model on the test split.
    Eval(CommonArgs),
    /// Online adapted metrics and prediction streams on the test split.
    AdaptEval(CommonArgs),
    /// FLOP counts and measured single-window latencies.
    Bench(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Synth(a)
            | Command::Extract(a)
            | Command::Train(a)
            | Command::Distill(a)
            | Command::Eval(a)
            | Command::AdaptEval(a)
            | Command::Bench(a) => a,
        }
    }
}

fn run(cli: &Cli) -> mtnam::Result<()> {
    let args = cli.command.common();
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.strict_hash = args.strict_hash;
    cfg.validate()?;
    match &cli.command {
        Command::Synth(_) => pipeline::cmd_synth(&cfg),
        Command::Extract(_) => pipeline::cmd_extract(&cfg),
        Command::Train(_) => pipeline::cmd_train(&cfg),
        Command::Distill(_) => pipeline::cmd_distill(&cfg),
        Command::Eval(_) => pipeline::cmd_eval(&cfg),
        Command::AdaptEval(_) => pipeline::cmd_adapt_eval(&cfg),
        Command::Bench(_) => pipeline::cmd_bench(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::MissingInput { .. } => 3,
                Error::Numeric(_) => 4,
                _ => 1,
            })
        }
    }
}
