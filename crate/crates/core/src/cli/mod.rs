//! `pnsgd` command-line front end.
//!
//! Exit codes: 0 on success, 1 for numerical failures, 2 for invalid
//! configuration or arguments.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::error::PrivacyError;

pub use config::RunConfig;
pub use output::{Cell, RunManifest, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Numerical(#[from] PrivacyError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub(crate) fn config(field: &str, message: impl std::fmt::Display) -> Self {
        CliError::Config {
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(e: impl std::fmt::Display) -> Self {
        CliError::Io(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Config { .. } | CliError::Io(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "pnsgd", version, about = "Privacy accounting and simulation for projected noisy SGD")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; a `.manifest.json` sidecar is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for grids and replicas.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// (ε, δ) for the per-index, randomly-stopped and shuffled variants.
    Account,
    /// Noise scales of a schedule and their δ limits.
    Calibrate,
    /// δ(n) against δ* over an n-grid.
    Sweep,
    /// Multi-epoch composition through RDP or GDP.
    Compose,
    /// Paired shuffled vs randomly-stopped simulation.
    Simulate,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let command: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, &command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, command: &[String]) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::config("--config", "missing"))?;
    let (config, text) = RunConfig::load(path)?;
    let seed = cli.seed.or(config.seed);
    let ctx = output::Context {
        command,
        config_text: &text,
        seed,
        format: cli.format,
        out: cli.out.as_deref(),
        base_dir: path.parent().unwrap_or_else(|| std::path::Path::new(".")),
    };
    let job = || match cli.command {
        Command::Account => commands::account(&config, &ctx),
        Command::Calibrate => commands::calibrate(&config, &ctx),
        Command::Sweep => commands::sweep(&config, &ctx),
        Command::Compose => commands::compose(&config, &ctx),
        Command::Simulate => commands::simulate(&config, &ctx, seed.unwrap_or(0)),
    };
    match cli.workers {
        Some(0) => Err(CliError::config("--workers", "must be >= 1")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(CliError::io)?
            .install(job),
        None => job(),
    }
}
