use std::path::PathBuf;

use clap::{Parser, Subcommand};
use gchord::cli::{run_command, Command};

/// Solve and verify the planar L_p Gaussian chord Minkowski problem.
#[derive(Parser)]
#[command(name = "gchord", version)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the flow to stationarity and write the series and summary.
    Solve(Common),
    /// Certify a stored support function.
    Verify {
        #[command(flatten)]
        common: Common,
        /// JSON array of support values, or a solve summary.
        #[arg(long)]
        h_file: PathBuf,
    },
    /// Compare the polar chord integral with the Cartesian oracle.
    Oracle(Common),
    /// Finite-difference first-variation survey.
    Variation(Common),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match Args::parse().command {
        Cmd::Solve(c) => run_command(Command::Solve, &c.config, None),
        Cmd::Verify { common, h_file } => run_command(Command::Verify, &common.config, Some(&h_file)),
        Cmd::Oracle(c) => run_command(Command::Oracle, &c.config, None),
        Cmd::Variation(c) => run_command(Command::Variation, &c.config, None),
    };
    std::process::exit(code);
}
