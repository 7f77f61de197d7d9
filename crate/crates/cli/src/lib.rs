//! Command-line harness: configuration, seeding, CSV emission, manifests and
//! the `--check` suites for the `ising`, `berbee`, `rc` and `factor`
//! subcommands.
//!
//! Exit codes: 0 success, 2 usage error, 3 resource-budget error, 4 a failed
//! `--check` assertion, 1 an output file could not be written.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser};

pub use commands::Subcommand;
use config::ExperimentConfig;
pub use error::{CliError, CliResult, EXIT_CHECK_FAILED};
use output::{write_csv, write_manifest, Manifest};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "LONGRANGE_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "longrange", version, about = "Long-range Ising, random-cluster and g-measure experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Heat-bath magnetisation curves and enumeration comparisons.
    Ising(RunArgs),
    /// Absorption curves of the coupling chain and partial-sum diagnostics.
    Berbee(RunArgs),
    /// Random-cluster exactness, dominance, folding and percolation.
    Rc(RunArgs),
    /// The factor gap surface over (beta, N).
    Factor(RunArgs),
}

impl Command {
    pub fn split(&self) -> (Subcommand, &RunArgs) {
        match self {
            Command::Ising(a) => (Subcommand::Ising, a),
            Command::Berbee(a) => (Subcommand::Berbee, a),
            Command::Rc(a) => (Subcommand::Rc, a),
            Command::Factor(a) => (Subcommand::Factor, a),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML configuration file; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path (default `<subcommand>.csv`); the manifest is
    /// written next to it as `<out>.manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run the acceptance assertions and exit with 4 if any fails.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    /// What the run prints on stdout: the check lines in check mode,
    /// nothing otherwise.
    pub stdout: String,
    pub exit_code: u8,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Sizes the global worker pool from [`WORKERS_ENV`] and returns the
/// number of workers in use.
pub fn configure_workers() -> CliResult<usize> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::usage(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
        // the pool can only be built once per process; later calls keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

pub fn execute(sub: Subcommand, args: &RunArgs) -> CliResult<RunSummary> {
    let start = Instant::now();
    let mut loaded = ExperimentConfig::load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        loaded.config.seed = seed;
    }
    if let Some(out) = &args.out {
        loaded.config.out = Some(out.clone());
    }
    let out = loaded.config.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", sub.name())));
    let workers = configure_workers()?;
    let outcome = sub.run(&loaded.config, args.check)?;

    let mut manifest = Manifest::new(sub.name(), &loaded, workers, args.check);
    write_csv(&out, &outcome.csv, &mut manifest)?;
    let (stdout, exit_code) = if args.check {
        let code = if outcome.checks.passed() { 0 } else { EXIT_CHECK_FAILED };
        manifest.checks = Some(outcome.checks.clone());
        (outcome.checks.render(), code)
    } else {
        (String::new(), 0)
    };
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    let manifest_path = write_manifest(&out, &manifest)?;
    Ok(RunSummary { stdout, exit_code, csv_path: out, manifest_path })
}

/// Parses the process arguments, runs, prints and returns the exit code.
pub fn main_entry() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (sub, args) = cli.command.split();
    match execute(sub, args) {
        Ok(r) => {
            print!("{}", r.stdout);
            eprintln!("wrote {} and {}", r.csv_path.display(), r.manifest_path.display());
            r.exit_code
        }
        Err(e) => {
            eprintln!("longrange {}: {e}", sub.name());
            e.exit_code()
        }
    }
}
