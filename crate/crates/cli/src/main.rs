mod config;
mod experiments;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, ExperimentKind, Expectation};
use experiments::RunError;

/// Experiment driver for the diraclax numerical laboratory.
#[derive(Parser)]
#[command(name = "diraclax", disable_help_subcommand = true)]
struct Cli {
    /// List the available experiment kinds and exit.
    #[arg(long)]
    list: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run { config: PathBuf },
}

fn main() -> ExitCode {
    // keep LAPACK single-threaded so repeated runs are bit-identical
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };

    if cli.list {
        if cli.command.is_some() {
            eprintln!("--list takes no further arguments");
            return ExitCode::from(2);
        }
        for (_, name, description) in ExperimentKind::all() {
            println!("{name} — {description}");
        }
        return ExitCode::SUCCESS;
    }

    let Some(Command::Run { config }) = cli.command else {
        eprintln!("usage: diraclax run <config.json> | diraclax --list");
        return ExitCode::from(2);
    };

    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", config.display());
            return ExitCode::from(2);
        }
    };
    let parsed: ExperimentConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid config: {e}");
            return ExitCode::from(2);
        }
    };

    match experiments::run(&parsed) {
        Ok(outcome) => {
            if !outcome.all_rows_pass && parsed.expect == Expectation::Fail {
                eprintln!("negative control failed its tolerances as expected");
            }
            if outcome.matches_expectation {
                ExitCode::SUCCESS
            } else {
                match parsed.expect {
                    Expectation::Pass => {
                        eprintln!("one or more checks failed their tolerances");
                    }
                    Expectation::Fail => {
                        eprintln!("negative control unexpectedly passed every tolerance");
                    }
                }
                ExitCode::from(1)
            }
        }
        Err(RunError::Validation(msg)) => {
            eprintln!("validation error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Computation(msg)) => {
            eprintln!("computational error: {msg}");
            ExitCode::from(3)
        }
    }
}
