//! `ccrm`: ingest wiki data, compute cultural relation measures, fit the
//! attention models and validate against external rankings.

mod analyze;
mod args;
mod config;
mod error;
mod ingest;
mod simulate;
mod validate;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliResult;

fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Ingest(a) => ingest::run(&a),
        Command::Analyze(a) => analyze::run(&a, seed.unwrap_or(0)),
        Command::Simulate(a) => simulate::run(&a, seed.unwrap_or(0)),
        Command::Validate(a) => validate::run(&a, seed.unwrap_or(0)),
        Command::All(a) => config::run_all(&a, seed, cli.jobs),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
