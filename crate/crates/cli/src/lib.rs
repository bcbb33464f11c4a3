//! Command-line surface for the rank-1 stability test and the AGC studies.
//!
//! Exit codes: 0 success or stable, 1 unstable or infeasible, 2 input
//! error, 3 simulation blow-up.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rank1_agc::agc::AgcError;
use rank1_agc::diagstab::DiagStabError;
use rank1_agc::numerics::NumericsError;
use rank1_agc::reduced::ReducedError;
use rank1_agc::sim::SimError;

pub use config::{ConfigDoc, SystemDoc};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSTABLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NON_FINITE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("writing output failed: {0}")]
    Output(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Agc(#[from] AgcError),
    #[error(transparent)]
    DiagStab(#[from] DiagStabError),
    #[error(transparent)]
    Reduced(#[from] ReducedError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Sim(SimError::NonFiniteState { .. }) => EXIT_NON_FINITE,
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rank1",
    version,
    about = "Rank-1 diagonal stability and multi-area AGC analysis"
)]
pub struct Cli {
    /// Worker threads for independent runs (0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank-1 diagonal stability verdict, margin and certificate (JSON).
    Check(CheckArgs),
    /// Perturbation bound and a σ scan of the certificate (CSV).
    Perturb(FileOut),
    /// Dominant singular mode sufficient condition for −Δ + S (JSON).
    SvdCond(FileOnly),
    /// Closed-loop AGC simulation: CSV traces and a JSON summary.
    Simulate(SimulateArgs),
    /// Sensitivity frequency response for one area (CSV).
    Bode(BodeArgs),
    /// Decrease-matrix margin under uniform biasing b = κβ (CSV).
    MarginStudy(FileOut),
    /// Per-area regulation capacity versus load step (JSON).
    Feasibility(FileOnly),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// JSON file with `delta`, `x`, `y`.
    #[arg(long, conflicts_with_all = ["delta", "x", "y"])]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Option<Vec<f64>>,
    /// Also run the randomized necessary/sufficient oracle.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct FileOnly {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct FileOut {
    #[arg(long)]
    pub config: PathBuf,
    /// CSV destination; the JSON summary then goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Full,
    Reduced,
    Both,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    pub mode: Mode,
    /// Directory for `full.csv` and `reduced.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BodeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output area (0-based).
    #[arg(long)]
    pub area: usize,
    /// Disturbance area (0-based); defaults to `--area`.
    #[arg(long)]
    pub cross: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs one command, writing results to `out` and summaries to `err`.
pub fn run(
    cli: &Cli,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> Result<i32, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Input(format!("cannot start {} workers: {e}", cli.jobs)))?;
    pool.install(|| match &cli.command {
        Command::Check(a) => commands::check(a, cli.seed, out),
        Command::Perturb(a) => commands::perturb(a, out, err),
        Command::SvdCond(a) => commands::svd_cond(a, out),
        Command::Simulate(a) => commands::simulate(a, cli.seed, out),
        Command::Bode(a) => commands::bode(a, out, err),
        Command::MarginStudy(a) => commands::margin_study(a, out, err),
        Command::Feasibility(a) => commands::feasibility(a, out),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(
            CliError::Sim(SimError::NonFiniteState { time: 1.0 }).exit_code(),
            EXIT_NON_FINITE
        );
        assert_eq!(
            CliError::Sim(SimError::EmptyOverlap).exit_code(),
            EXIT_INPUT
        );
        assert_eq!(CliError::Input("x".into()).exit_code(), EXIT_INPUT);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "rank1", "--jobs", "2", "check", "--delta", "1,2", "--x", "-1,0.5", "--y", "1,1",
        ])
        .unwrap();
        assert_eq!(cli.jobs, 2);
        match cli.command {
            Command::Check(a) => assert_eq!(a.x, Some(vec![-1.0, 0.5])),
            _ => panic!("wrong subcommand"),
        }
        assert!(
            Cli::try_parse_from(["rank1", "simulate", "--config", "c.json", "--mode", "slow"])
                .is_err()
        );
    }
}
