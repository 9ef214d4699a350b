//! `qcoin`: bounds, simulations, loss sweeps, classical audits and
//! intensity optimisation from a TOML configuration.

mod commands;
mod config;
mod record;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::RunConfig;
use crate::record::{render, Format};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Params(#[from] qcoin::ParamError),
    #[error(transparent)]
    Protocol(#[from] qcoin::ProtocolError),
}

#[derive(Parser, Debug)]
#[command(
    name = "qcoin",
    version,
    about = "Coherent-state coin tossing analysis"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cheating bounds, abort rate, merit and reference values.
    Bounds,
    /// Monte Carlo batch for a pair of strategies.
    Simulate,
    /// Merit against transmission loss and its sign change.
    SweepLoss,
    /// Classical protocol evaluation or random-tree audit.
    Classical,
    /// Best signal intensity for the merit.
    OptimizeAlpha,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

fn run(cli: &Cli) -> Result<commands::Output, CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => return Err(CliError::Config("--config PATH is required".into())),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    match cli.command {
        Command::Bounds => commands::bounds(&config),
        Command::Simulate => commands::simulate(&config, seed),
        Command::SweepLoss => commands::sweep_loss(&config),
        Command::Classical => commands::classical(&config, seed),
        Command::OptimizeAlpha => commands::optimize(&config),
    }
}

fn emit(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = match run(&cli) {
        Ok(output) => output,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e @ CliError::Params(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e @ CliError::Protocol(_)) => {
            eprintln!("internal error: {e}");
            return ExitCode::from(EXIT_INVARIANT);
        }
    };
    for warning in &output.warnings {
        eprintln!("warning: {warning}");
    }
    if let Err(e) = emit(&cli, &render(&output.records, cli.format)) {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    if !output.violations.is_empty() {
        for v in &output.violations {
            eprintln!("invariant violation: {v}");
        }
        return ExitCode::from(EXIT_INVARIANT);
    }
    ExitCode::SUCCESS
}
