//! `brpf`: run particle-filter experiments from TOML configs.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime
//! failures (partial results are marked incomplete in the metadata).

mod bench;
mod config;
mod error;
mod output;
mod problem;
mod run;
mod selftest;
mod series;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{resolve_workers, CommandLine, Loaded};
use error::CliError;

#[derive(Parser)]
#[command(name = "brpf", version, about = "Bernoulli race particle filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated filter runs: results.csv, ratios.csv, replicates.csv.
    Run(Common),
    /// Run time against the number of particles: bench.csv, fit.csv.
    Bench(Common),
    /// Per-step particle mean and 10%/90% quantiles of one run: series.csv.
    Series(Common),
    /// Quick invariant checks; needs no config.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Worker threads for the parallel checks (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment file (flat TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `workers` (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sets any config key, e.g. `--override particles=1000`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<Loaded, CliError> {
        Loaded::from_file(
            &self.config,
            &CommandLine {
                seed: self.seed,
                workers: self.workers,
                out: self.out.clone(),
                overrides: self.overrides.clone(),
            },
        )
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => run::run(&c.load()?, &c.config),
        Command::Bench(c) => bench::bench(&c.load()?, &c.config),
        Command::Series(c) => series::series(&c.load()?, &c.config),
        Command::Selftest { seed, workers } => selftest::selftest(seed, resolve_workers(workers)),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("brpf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
