//! Command-line driver: runs, sweeps, checks and plot tables.

mod check;
mod checks;
mod config;
mod error;
mod manifest;
mod plot;
mod run;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use viscoflow_core::SweepKind;

use crate::error::{CliError, CliResult};
use crate::plot::What;

const EXIT_HELP: &str = "\
Exit codes: 0 success, 1 other failure, 2 configuration or usage error,
3 solver failure (partial results kept), 4 violated check.

VISCOFLOW_THREADS caps the number of worker threads.";

#[derive(Parser)]
#[command(name = "viscoflow", version, about = "Viscoelastic time-delayed minimizing movements", after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and store the run directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's output_dir, then runs/<config name>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Geometric halving sweep with a convergence-rate table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parameter to halve: delta, tau, h (with tau) or diagonal (tau and delta).
        #[arg(long, value_parser = parse_sweep)]
        param: Option<SweepKind>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute every check from a stored run or sweep directory.
    Check {
        dir: PathBuf,
        /// Multiplies every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Print CSV tables for plotting.
    #[command(after_long_help = plot::SCHEMA_HELP)]
    PlotData {
        dir: PathBuf,
        #[arg(long, value_enum)]
        what: What,
    },
}

fn parse_sweep(s: &str) -> Result<SweepKind, String> {
    SweepKind::parse(s).ok_or_else(|| format!("unknown sweep parameter {s:?} (expected delta, tau, h or diagonal)"))
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("VISCOFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("VISCOFLOW_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::failure(e.to_string()))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { config, out } => run::simulate(&config, out.as_deref()),
        Command::Sweep {
            config,
            param,
            levels,
            out,
        } => run::sweep(&config, param, levels, out.as_deref()),
        Command::Check { dir, tol_scale } => check::check(&dir, tol_scale),
        Command::PlotData { dir, what } => plot::plot_data(&dir, what, &mut io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
