//! Command-line front end: configuration ingestion, simulation
//! orchestration, trace/report serialization and plot-data emission.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric error,
//! 4 no HP-valid sample anywhere in the trace.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::{EngineChoice, Format, ModelChoice, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or physically invalid configuration.
    Config(String),
    /// The computation itself failed (overflow, truncation, no convergence).
    Numeric(String),
    /// Every sample violated the Holstein-Primakoff bound.
    HpInvalid(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::HpInvalid(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric error: {msg}"),
            CliError::HpInvalid(msg) => write!(f, "HP validity error: {msg}"),
        }
    }
}

impl From<nve_squeeze::Error> for CliError {
    fn from(e: nve_squeeze::Error) -> Self {
        use nve_squeeze::Error as E;
        match e {
            E::NoValidSamples { .. } => CliError::HpInvalid(e.to_string()),
            E::InvalidParams(_)
            | E::InvalidSpec(_)
            | E::Resonance { .. }
            | E::UnknownMode { .. }
            | E::DissipationUnsupported(_)
            | E::BudgetExceeded { .. }
            | E::CutoffInadequate { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "nve-squeeze",
    version,
    about = "Two-mode squeezing of NV-center ensembles through a phonon bus: \
             Gaussian dynamics, closed forms and a truncated-Fock oracle"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output] dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Engine override.
    #[arg(long, value_enum)]
    engine: Option<EngineChoice>,
    /// Model override.
    #[arg(long, value_enum)]
    model: Option<ModelChoice>,
    /// Restrict emission to one format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Reserved; echoed into reports. All current algorithms are
    /// deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one model and write the squeezing trace plus a summary.
    Simulate(Common),
    /// Run the four-mode and eliminated models on a shared grid and report
    /// their variance deviation.
    Compare(Common),
    /// Evaluate a parameter grid ([sweep] section).
    Sweep(Common),
    /// Constrained minimum-variance search ([optimize] section).
    Optimize(Common),
    /// Beam-geometry estimates of the physical rates ([geometry] section).
    Device(Common),
    /// Truncated-Fock oracle run, or convention adjudication.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Measure the first variance minimum and resolve the oscillation
        /// argument convention instead of emitting a trace.
        #[arg(long)]
        adjudicate: bool,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (common, run): (&Common, fn(&RunConfig, &commands::Overrides) -> Result<(), CliError>) =
        match &cli.command {
            Command::Simulate(c) => (c, commands::simulate),
            Command::Compare(c) => (c, commands::compare),
            Command::Sweep(c) => (c, commands::sweep),
            Command::Optimize(c) => (c, commands::optimize),
            Command::Device(c) => (c, commands::device),
            Command::Oracle { common, adjudicate } => {
                let config = RunConfig::load(&common.config)?;
                let over = overrides(common);
                return commands::oracle(&config, &over, *adjudicate);
            }
        };
    let config = RunConfig::load(&common.config)?;
    run(&config, &overrides(common))
}

fn overrides(common: &Common) -> commands::Overrides {
    commands::Overrides {
        out: common.out.clone(),
        engine: common.engine,
        model: common.model,
        format: common.format,
        seed: common.seed,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
