//! `orbit-localize`: evaluate, verify and calibrate orbit Fourier transforms.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, Overrides};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing configuration (exit 2).
    Config(String),
    /// A check or oracle comparison failed (exit 4).
    Verification(String),
    /// Every grid point was degenerate (exit 3).
    DegenerateOnly(usize),
    /// Any other runtime failure (exit 1).
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::DegenerateOnly(_) => EXIT_DEGENERATE,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::DegenerateOnly(n) => write!(f, "all {n} grid points are degenerate"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<orbit_localize::Error> for CliError {
    fn from(e: orbit_localize::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "orbit-localize", version, about = "Fixed-point evaluation of coadjoint orbit Fourier transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file (default: output.path from the config, else stdout).
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate F on the configured grid.
    Eval(Common),
    /// Run a named property suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// algebra | fixedpoints | localize | geometry | oracle | all
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Write a sibling config with calibrated constants.
    Calibrate(Common),
    /// Compare the formula against the independent oracle.
    Oracle(Common),
    /// Scaling-limit defects of the twisted moment map.
    CycleLimit(Common),
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("ORBIT_LOCALIZE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("ORBIT_LOCALIZE_THREADS = `{v}` is not a positive integer")))?;
        if n == 0 {
            return Err(CliError::Config("ORBIT_LOCALIZE_THREADS must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let (common, suite) = match &cli.command {
        Command::Eval(c) | Command::Calibrate(c) | Command::Oracle(c) | Command::CycleLimit(c) => (c, None),
        Command::Verify { common, suite } => (common, Some(suite.as_str())),
    };
    let overrides = Overrides {
        out: common.out.clone(),
        format: common.format,
        seed: common.seed,
    };
    let cfg = config::RunConfig::load(&common.config, &overrides)?;
    match cli.command {
        Command::Eval(_) => commands::eval(&cfg),
        Command::Verify { .. } => commands::verify(&cfg, suite.unwrap_or("all")),
        Command::Calibrate(_) => commands::calibrate(&cfg, &common.config, &overrides),
        Command::Oracle(_) => commands::oracle(&cfg),
        Command::CycleLimit(_) => commands::cycle_limit(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
