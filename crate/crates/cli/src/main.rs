//! Batch front end for the ocular hemodynamics simulator and its
//! uncertainty/sensitivity engines.
//!
//! ```text
//! hemo-uq <simulate|propagate|sobol|fast|converge|validate>
//!         --config <file> [--seed N] [--workers N] [--out DIR]
//! ```
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration/IO failure.

mod commands;
mod config;
mod error;
mod manifest;
mod output;

use clap::{Parser, Subcommand};
use config::{ExperimentKind, LoadedConfig};
use error::{CliError, CliResult};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "hemo-uq",
    version,
    about = "Lumped-parameter ocular hemodynamics: simulation, uncertainty propagation, Sobol'/FAST sensitivity analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config's experiment.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: HEMO_UQ_WORKERS or all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory; overrides the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// One deterministic transient run: trajectory CSV + QoI JSON.
    Simulate,
    /// Monte Carlo uncertainty propagation: raw matrix, summary, plot data.
    Propagate,
    /// Sobol' indices via the pick-freeze estimator ((d+2)*n evaluations).
    Sobol,
    /// Sobol' indices via the FAST spectral method (d*n evaluations).
    Fast,
    /// Run an estimator over the convergence schedule of sample sizes.
    Converge,
    /// Check config and model files; report all violations and warnings.
    Validate,
}

impl Command {
    fn expected_kind(&self) -> Option<ExperimentKind> {
        match self {
            Command::Simulate => Some(ExperimentKind::Simulate),
            Command::Propagate => Some(ExperimentKind::Propagate),
            Command::Sobol => Some(ExperimentKind::Sobol),
            Command::Fast => Some(ExperimentKind::Fast),
            Command::Converge => Some(ExperimentKind::Converge),
            Command::Validate => None,
        }
    }
}

fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("HEMO_UQ_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
    .max(1)
}

fn run(cli: &Cli) -> CliResult<()> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::config("cli", "--config <file> is required"))?;
    let loaded = LoadedConfig::load(config_path)?;

    if let Some(expected) = cli.command.expected_kind() {
        if loaded.config.experiment.kind != expected {
            return Err(CliError::config(
                "cli",
                format!(
                    "config declares experiment.kind = {}, but the {} command was invoked",
                    loaded.config.experiment.kind.as_str(),
                    expected.as_str()
                ),
            ));
        }
    }

    let workers = resolve_workers(cli.workers);
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .ok(); // already initialised is fine

    let seed = cli.seed.or(loaded.config.experiment.seed).unwrap_or(0);
    let out = cli.out.as_deref();
    match cli.command {
        Command::Simulate => commands::simulate::run(&loaded, out, workers),
        Command::Propagate => commands::propagate::run(&loaded, out, workers, seed),
        Command::Sobol | Command::Fast | Command::Converge => {
            commands::sensitivity::run(&loaded, out, workers, seed)
        }
        Command::Validate => commands::validate::run(&loaded),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
