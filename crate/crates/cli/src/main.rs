//! `qgpe`: command-line driver for quantics Gross-Pitaevskii runs.

mod analysis;
mod commands;
mod config;
mod error;
mod fanout;
mod manifest;
mod snapshot;
mod state;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{analyze, compare, evolve, export, init};

#[derive(Parser, Debug)]
#[command(name = "qgpe", version, about = "Damped Gross-Pitaevskii dynamics on quantics MPS")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    Init(init::InitArgs),
    Evolve(evolve::EvolveArgs),
    Analyze(analyze::AnalyzeArgs),
    Compare(compare::CompareArgs),
    Export(export::ExportArgs),
}

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

/// Thread cap from `QGPE_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("QGPE_THREADS").ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = threads_from_env() {
        // SAFETY: plain setter in the linked OpenBLAS, called before any BLAS work.
        unsafe { openblas_set_num_threads(n.min(i32::MAX as usize) as std::os::raw::c_int) };
    }
    let result = match &cli.command {
        Command::Init(args) => init::run(args),
        Command::Evolve(args) => evolve::run(args),
        Command::Analyze(args) => analyze::run(args),
        Command::Compare(args) => compare::run(args),
        Command::Export(args) => export::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qgpe: {e}");
            e.exit_code()
        }
    }
}
