//! `poleshift`: spectra, pole maps, sensitivity sweeps, shift comparisons
//! and identity checks for layered spherical particles and planar slabs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod config;
mod error;
mod journal;
mod output;
mod polemap;
mod shift;
mod spectrum;
mod svg;
mod sweep;
mod trajectory;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::{exit_code, CliError, EXIT_OK};
use crate::output::{Format, Sink};

#[derive(Debug, Parser)]
#[command(name = "poleshift", version, about = "Pole and zero shifts of open resonators")]
struct Cli {
    /// TOML run configuration; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Format of tabular output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extinction, scattering and absorption cross sections over real k.
    Spectrum,
    /// log10 |a| over a complex-k grid with located poles and zeros.
    Polemap,
    /// Sensitivity heat maps over core radius and shell thickness.
    Sweep,
    /// Residue, ratio-form and direct shifts of one singularity.
    Shift,
    /// Runs a verification suite; exits with status 1 on failure.
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
    },
    /// Follows a singularity along a geometry parameter.
    Trajectory,
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let config = Config::load(cli.config.as_deref())?;
    let sink = Sink::new(&cli.out, cli.format)?;
    match &cli.command {
        Command::Spectrum => spectrum::run(&config, &sink),
        Command::Polemap => polemap::run(&config, &sink),
        Command::Sweep => sweep::run(&config, &sink),
        Command::Shift => shift::run(&config, &sink),
        Command::Verify { suite } => verify::run(&config, &sink, *suite),
        Command::Trajectory => trajectory::run(&config, &sink),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
