use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topocf::pipeline::{run, Command, ExperimentConfig, RunOptions};
use topocf::Error;

#[derive(Parser)]
#[command(version, about = "Topology-aware analysis of graph collaborative filtering")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides TOPOCF_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Reuse finished cells whose inputs and outputs are unchanged.
    #[arg(long, global = true)]
    resume: bool,
    /// Extra `key=value` settings, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Extract the largest component and draw the sample pool.
    Sample,
    /// Compute the eleven characteristics of every sample.
    Characterize,
    /// Train every configured model on every sample.
    Train,
    /// Train and evaluate (metric cells do both).
    Evaluate,
    /// Fit one explanatory regression per model.
    Explain,
    /// Node/edge mixing sweep.
    Rq2,
    /// Regressions plus the markdown and CSV report.
    Report,
    /// Everything, including the mixing sweep.
    RunAll,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Sample => Command::Sample,
            Cmd::Characterize => Command::Characterize,
            Cmd::Train => Command::Train,
            Cmd::Evaluate => Command::Evaluate,
            Cmd::Explain => Command::Explain,
            Cmd::Rq2 => Command::Rq2,
            Cmd::Report => Command::Report,
            Cmd::RunAll => Command::RunAll,
        }
    }
}

fn configure(cli: &Cli) -> topocf::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set {kv:?}: expected key=value")))?;
        cfg.set(k, v)?;
    }
    cfg.apply_env();
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = match configure(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg, cli.command.into(), RunOptions { resume: cli.resume }) {
        Ok(outcome) => {
            let failed = outcome.failed();
            eprintln!(
                "{} cells, {} executed, {} failed; outputs in {}",
                outcome.ledger.len(),
                outcome.executed(),
                failed,
                cfg.output.display()
            );
            if failed > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
