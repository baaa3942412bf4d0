use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vecopt::bench;

/// Benchmark harness for black-box vector optimization.
#[derive(Parser)]
#[command(name = "vecopt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Seeds to run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print an aligned metric table from aggregate.json files.
    Compare { aggregates: Vec<PathBuf> },
    /// Print the ground-truth Pareto indices of a problem under an order.
    Pareto {
        problem: PathBuf,
        order: PathBuf,
    },
}

// exit codes: 0 success, 1 config error, 2 partial (per-seed) failure
fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            jobs,
            output_dir,
        } => match bench::run_experiment(&config, jobs, output_dir.as_deref()) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => {
                eprintln!("vecopt: some seeds failed; see per-seed summary.json");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("vecopt: {e}");
                ExitCode::from(1)
            }
        },
        Command::Compare { aggregates } => match bench::compare(&aggregates) {
            Ok(table) => {
                print!("{table}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("vecopt: {e}");
                ExitCode::from(1)
            }
        },
        Command::Pareto { problem, order } => match bench::ground_truth(&problem, &order) {
            Ok(indices) => {
                for i in indices {
                    println!("{i}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("vecopt: {e}");
                ExitCode::from(1)
            }
        },
    }
}
