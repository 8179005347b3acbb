mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;

/// Observer-based PI boundary regulation of 1-D reaction-diffusion equations.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Io {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: output.directory of the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, boundary traces and band check.
    Eig(Io),
    /// N0, gains, Kalman and Cauchy checks, certificate, equilibrium.
    Design(Io),
    /// Design, then closed-loop simulation and metrics.
    Simulate(Io),
    /// Runs the published example end to end and prints a pass/fail summary.
    ReproducePaper {
        /// Replaces the built-in example configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn prepare(config: &RunConfig, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eig(io) => {
            let config = RunConfig::load(&io.config)?;
            commands::eig(&config, &prepare(&config, io.out.as_deref())?)
        }
        Command::Design(io) => {
            let config = RunConfig::load(&io.config)?;
            commands::design(&config, &prepare(&config, io.out.as_deref())?).map(|_| ())
        }
        Command::Simulate(io) => {
            let config = RunConfig::load(&io.config)?;
            commands::simulate_cmd(&config, &prepare(&config, io.out.as_deref())?).map(|_| ())
        }
        Command::ReproducePaper { config, out } => {
            let config = match config {
                Some(path) => RunConfig::load(&path)?,
                None => RunConfig::paper_fixture(),
            };
            commands::reproduce_paper(&config, &prepare(&config, out.as_deref())?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
