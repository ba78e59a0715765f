//! `oiptb`: band structures, bulk properties, superlattice and quantum-well
//! gaps, and parameter fitting from the command line.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable naming a directory of material JSON files that
/// replaces the built-in database.
pub const MATERIALS_DIR_ENV: &str = "OIPTB_MATERIALS_DIR";

#[derive(Debug, Parser)]
#[command(name = "oiptb", version, about = "sp3s* tight-binding bands, gaps and parameter fitting")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Random seed (used by `fit`; recorded in every manifest).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Extra material files added to the database (repeatable).
    #[arg(long = "material-file", global = true)]
    pub material_files: Vec<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bulk band structure along a high-symmetry path, as CSV.
    Bands(commands::BandsArgs),
    /// The 23 bulk features with targets and errors, as JSON.
    Props(commands::PropsArgs),
    /// Gap of a binary superlattice, as JSON.
    SlGap(commands::SlGapArgs),
    /// Genetic-algorithm fit of the free parameters.
    Fit(commands::FitArgs),
    /// Quantum-well gap and cutoff wavelength over thickness and composition, as CSV.
    QwSweep(commands::QwSweepArgs),
}

/// How a command failed, which fixes the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, files or configuration.
    Usage(anyhow::Error),
    /// The numerics failed on valid input.
    Numerical(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Numerical(e) => e,
        }
    }
}

impl From<oiptb::Error> for Failure {
    fn from(e: oiptb::Error) -> Self {
        if e.is_numerical() { Failure::Numerical(e.into()) } else { Failure::Usage(e.into()) }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }

    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
