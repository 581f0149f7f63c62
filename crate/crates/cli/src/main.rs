//! `ghgeo`: Gromov-Hausdorff distances and geodesics between finite metric
//! spaces from the command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 IO or parse error,
//! 3 result limited by the node budget.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gh_core::metric::DEFAULT_TOL;
use gh_core::solver::DEFAULT_BUDGET;

#[derive(Parser, Debug)]
#[command(name = "ghgeo", version, about = "Gromov-Hausdorff distances and geodesics between finite metric spaces")]
pub struct Cli {
    /// Metric validation tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Solver worker threads.
    #[arg(long, global = true, env = "GH_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a distance matrix against the metric axioms.
    Validate { path: PathBuf },
    /// Compute d_GH between two spaces.
    Gh {
        x: PathBuf,
        y: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        /// Net radius for `--mode net`.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Do not seed the search with the greedy correspondence.
        #[arg(long)]
        no_seed: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build interpolants along an optimal correspondence, or verify the
    /// geodesic identity at a list of times.
    Geodesic {
        x: PathBuf,
        y: PathBuf,
        /// Times at which to emit interpolants (comma separated).
        #[arg(long, value_delimiter = ',', conflicts_with = "times")]
        t: Vec<f64>,
        /// Times for the verification report (comma separated, 0 first, 1 last).
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        /// Use this correspondence instead of solving for one.
        #[arg(long)]
        correspondence: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the report cells as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a pseudo-random space.
    Generate {
        #[arg(long, value_enum, default_value_t = Kind::Euclidean)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve on a decreasing sequence of nets and report convergence.
    Experiment {
        x: PathBuf,
        y: PathBuf,
        /// Strictly decreasing net radii (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        schedule: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Brute,
    Net,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Euclidean,
    PerturbedUltrametric,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
