//! Batch experiment front end: dataset preparation, single runs, sweeps,
//! and regret analysis. Every command prints machine-readable JSON lines
//! to stdout; `--pretty` adds human-readable tables.
//!
//! Exit codes: 0 success, 1 runtime or validation failure, 2 usage error.

mod prepare;
mod regret;
mod run_cmd;
mod sweep;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "walklearn",
    version,
    about = "Random-walk SGD experiments with bandit-adaptive node sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or partition a dataset into per-node shards plus a test split.
    Prepare(prepare::PrepareArgs),
    /// Execute one walk and write its trace and summary.
    Run(run_cmd::RunArgs),
    /// Run a cross-product of walkers, similarity/connectivity levels and seeds.
    Sweep(sweep::SweepArgs),
    /// Recompute regret series from a completed run directory.
    Regret(regret::RegretArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prepare(args) => prepare::execute(args),
        Command::Run(args) => run_cmd::execute(args),
        Command::Sweep(args) => sweep::execute(args),
        Command::Regret(args) => regret::execute(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
