//! `mzq`: simulate, synthesize, fit and classify interferometer spectra.

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::failure::{CliResult, Failure};
use crate::output::Ctx;

#[derive(Parser)]
#[command(name = "mzq", version, about = "Qubit-in-interferometer spectra: simulation and decoherence fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Noiseless spectrum of a circuit on a frequency grid.
    Simulate(RunArgs),
    /// Noisy synthetic spectra, optionally one per flux bias.
    Synth(RunArgs),
    /// Fit qubit parameters to one trace or to every trace of a manifest.
    FitSpectrum(RunArgs),
    /// Fit relaxation and dephasing models to a rate table.
    FitRates(RunArgs),
    /// Label the lineshape of each trace.
    Classify(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

/// Caps the worker pool from `MZQ_THREADS`.
fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("MZQ_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::config(format!("MZQ_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let (args, command): (&RunArgs, fn(&Ctx) -> CliResult<()>) = match &cli.command {
        Command::Simulate(a) => (a, commands::simulate),
        Command::Synth(a) => (a, commands::synth),
        Command::FitSpectrum(a) => (a, commands::fit_spectrum),
        Command::FitRates(a) => (a, commands::fit_rates),
        Command::Classify(a) => (a, commands::classify),
    };
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::config(format!("{}: {e}", args.out.display())))?;
    let ctx = Ctx {
        out: args.out.clone(),
        config: args.config.clone(),
        seed: args.seed,
        quiet: args.quiet,
    };
    command(&ctx)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
