//! `debris`: prepare TLE data, build scenarios, train the policy and compare
//! sequencing methods.

mod commands;
mod config;
mod data;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "debris", version, about = "Multi-debris rendezvous sequencing toolkit")]
struct Cli {
    /// TOML run configuration ([leg], [ga], [ppo], [parking], n_debris).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Debris per scenario (overrides the config file).
    #[arg(long, global = true)]
    n_debris: Option<usize>,
    /// Δv cap per leg in km/s (overrides the config file).
    #[arg(long, global = true)]
    dv_cap: Option<f64>,
    /// More log output; repeat for debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic debris cloud as TLE text.
    Synth(SynthArgs),
    /// Parse a TLE file and dump normalized elements as CSV.
    Ingest(IngestArgs),
    /// Split a TLE file 70/15/15 into a data directory.
    Split(SplitArgs),
    /// Sample scenarios from one part of a data directory.
    Scenarios(ScenariosArgs),
    /// Solve a scenario file with one method.
    Solve(SolveArgs),
    /// Train the masked PPO policy on the train split.
    Train(TrainArgs),
    /// Run several methods on a scenario file and write records and statistics.
    Compare(CompareArgs),
    /// Summarize a records CSV.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Number of objects (default: the built-in cloud size).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub tle: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub tle: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ScenariosArgs {
    /// Directory written by `debris split`.
    #[arg(long)]
    pub data: PathBuf,
    /// train, test or eval.
    #[arg(long, default_value = "eval")]
    pub part: String,
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub scenarios: PathBuf,
    /// greedy, genetic, ppo or exact.
    #[arg(long)]
    pub method: String,
    /// Policy checkpoint, required for ppo.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Optional records CSV.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint path (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-episode reward log CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub episodes: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Comma-separated methods.
    #[arg(long, default_value = "greedy,genetic,ppo", value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Receives records.csv and stats.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// GA seed (overrides the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Runs per solve; the recorded time is their mean.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Stats CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report the TTR improvement of `candidate` over this method.
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long, default_value = "ppo")]
    pub candidate: String,
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Infeasible(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }
}

pub trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let overrides = Overrides {
        n_debris: cli.n_debris,
        dv_cap: cli.dv_cap,
        ..Overrides::default()
    };
    match commands::run(cli.command, cli.config.as_deref(), overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(e) | Failure::Data(e) => eprintln!("error: {e:#}"),
                Failure::Infeasible(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
