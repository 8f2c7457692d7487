use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use willmore_cli::{execute, Command, Overrides};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Verify,
    Potentials,
    Expand,
    Minimize,
    Estimates,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Verify => Command::Verify,
            Cmd::Potentials => Command::Potentials,
            Cmd::Expand => Command::Expand,
            Cmd::Minimize => Command::Minimize,
            Cmd::Estimates => Command::Estimates,
        }
    }
}

/// Numerical checks of the Willmore conservation laws and of small
/// area-constrained Willmore surfaces.
#[derive(Debug, Parser)]
#[command(name = "willmore-lab", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_FAILED_CHECKS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        out: args.out,
        seed: args.seed,
    };
    match execute(args.command.into(), &args.config, &overrides) {
        Ok((outcome, dir)) => {
            for c in outcome.report.failures() {
                eprintln!("FAILED {} (value {:.3e})", c.name, c.value);
            }
            let total = outcome.report.checks.len();
            let failed = outcome.report.failures().count();
            println!("{}: {}/{} checks passed, outputs in {}", outcome.report.command, total - failed, total, dir.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED_CHECKS)
            }
        }
        Err(e) => {
            eprintln!("willmore-lab: {e}");
            if e.is_usage() {
                eprintln!("usage: willmore-lab <verify|potentials|expand|minimize|estimates> --config <path> [--out <dir>] [--seed <u64>]");
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
