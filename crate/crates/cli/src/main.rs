//! `rpu`: worst-case optimal probability updating from the command line.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit status for unreadable, malformed or invalid input.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit status for solver errors and failed certificates.
pub const EXIT_SOLVER: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "rpu",
    version,
    about = "Worst-case optimal strategies for games with coarse data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Game file (JSON)
    pub path: PathBuf,
    /// Override the loss in the file (log, brier, rand01, hard01)
    #[arg(long)]
    pub loss: Option<String>,
    /// Certificate tolerance
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Random restarts of the ascent solver
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Seed for the restarts
    #[arg(long, env = "RPU_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Emit a machine-readable JSON report
    #[arg(long)]
    pub json: bool,
    /// Print nothing on success
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a game file and summarize its structure
    Validate(Common),
    /// Solve for both players and check the certificate
    Solve(Common),
    /// Compute the RCAR vector and strategy
    Rcar(Common),
    /// Graph, matroid, partition and connectivity flags
    Classify(Common),
    /// Split into connected components
    Decompose(Common),
    /// Build a marginal on which log and Brier loss disagree
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// Perturbation for structures whose messages all have the same size
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Compare the solver with the brute-force grid oracle
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Grid steps per outcome row
        #[arg(long, default_value_t = 100)]
        resolution: usize,
    },
    /// Check a saved report (or a fresh solve) against the game
    Verify {
        #[command(flatten)]
        common: Common,
        /// JSON report written by `rpu solve --json` or `rpu rcar --json`
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(c) => commands::validate(c),
        Command::Solve(c) => commands::solve(c),
        Command::Rcar(c) => commands::rcar(c),
        Command::Classify(c) => commands::classify_cmd(c),
        Command::Decompose(c) => commands::decompose_cmd(c),
        Command::Counterexample { common, epsilon } => commands::counterexample(common, *epsilon),
        Command::Oracle { common, resolution } => commands::oracle(common, *resolution),
        Command::Verify { common, report } => commands::verify(common, report.as_deref()),
    };
    match result {
        Ok(output) => {
            if !output.text.is_empty() {
                print!("{}", output.text);
            }
            ExitCode::from(output.code)
        }
        Err(failure) => {
            match failure.tag {
                Some(tag) => eprintln!("error [{tag}]: {}", failure.message),
                None => eprintln!("error: {}", failure.message),
            }
            ExitCode::from(failure.code)
        }
    }
}
