mod config;
mod ingest;
mod inputs;
mod manifest;
mod report;
mod simulate;
mod topics;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Trace-driven simulator for static-topic-dynamic query-result caches.
#[derive(Debug, Parser)]
#[command(name = "stdcache", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Flat key = value configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice of the run.
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (1 runs sequentially, default all cores).
    #[arg(long, global = true, value_name = "J")]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize a raw query log and split it into training and test streams.
    Ingest(ingest::IngestArgs),
    /// Assign topics to training queries.
    Topics(topics::TopicsArgs),
    /// Replay the test stream through one cache per configured variant and size.
    Simulate(simulate::SimArgs),
    /// Run a parameter grid plus the clairvoyant bound per size.
    Sweep(simulate::SimArgs),
    /// Summarize the CSVs of a sweep directory.
    Report(report::ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogFormat {
    Aol,
    Msn,
    Events,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopicSource {
    Lda,
    Map,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdmissionKind {
    None,
    Features,
    Singleton,
}

/// Training fraction, strictly between 0 and 1.
pub fn parse_split(s: &str) -> Result<f64, String> {
    let f: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(format!("{f} is outside (0, 1)"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Ingest(a) => ingest::run(&cli.global, &a),
        Command::Topics(a) => topics::run(&cli.global, &a),
        Command::Simulate(a) => simulate::run(&cli.global, &a, simulate::Mode::Points),
        Command::Sweep(a) => simulate::run(&cli.global, &a, simulate::Mode::Grid),
        Command::Report(a) => report::run(&cli.global, &a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
