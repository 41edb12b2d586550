//! Command-line harness for the half-space cut solver.
//!
//! All commands read a JSON config; see the repository README for the
//! schema. Exit codes: 0 success, 1 diagnostic failure, 2 iteration cap,
//! 3 invalid config, 4 invalid shift-size sequence, 5 runtime failure.

mod config;
mod run;
mod suite;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "vipcut",
    version,
    about = "Variational inequalities over fixed-point sets via half-space cuts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem (builtin or explicit) and write trace/summary files.
    Solve {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Trace CSV destination; overrides output.trace from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary JSON destination; overrides output.summary.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run operator/field checks from the config's diagnostics section.
    Diagnose {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Summary JSON destination; overrides output.summary.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Solve a bilevel p-minimal-norm selection problem.
    Bilevel {
        /// JSON run configuration with a bilevel section (or builtin).
        #[arg(long)]
        config: PathBuf,
        /// Trace CSV destination; overrides output.trace from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary JSON destination; overrides output.summary.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run the builtin suite and write a merged results CSV.
    Bench {
        /// Suite name; "builtin" is the only one.
        #[arg(long, default_value = "builtin")]
        suite: String,
        /// Merged results CSV destination.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve {
            config,
            out,
            summary,
        } => run::run_solve(&config, out, summary),
        Command::Diagnose { config, summary } => run::run_diagnose(&config, summary),
        Command::Bilevel {
            config,
            out,
            summary,
        } => run::run_bilevel(&config, out, summary),
        Command::Bench { suite, out } => run::run_bench(&suite, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
