//! `sepnmf`: column extraction, outlier mode, synthetic instances and
//! benchmark sweeps from the command line.
//!
//! Exit status: 0 on success, 2 for usage and input errors, 3 when an
//! algorithm fails (rank deficiency, non-convergence under `--strict`).

mod bench;
mod extract;
mod failure;
mod input;
mod manifest;
mod outliers;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "sepnmf", version, about = "Separable NMF by successive projection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract columns and print their 1-based indices.
    Extract(extract::ExtractArgs),
    /// Extract columns from data containing outlier columns.
    Outliers(outliers::OutliersArgs),
    /// Write a synthetic instance and its ground truth.
    Synth(synth::SynthArgs),
    /// Sweep noise levels and report recovery rates and thresholds.
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(failure::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Extract(args) => extract::run(args),
        Command::Outliers(args) => outliers::run(args),
        Command::Synth(args) => synth::run(args),
        Command::Bench(args) => bench::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
