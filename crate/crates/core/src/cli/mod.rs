//! Command-line driver. Exit codes: 0 success, 2 configuration error,
//! 3 runtime failure.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::RunConfig;
pub use run::{density_pipeline, DensityPath, DensityRun, Files};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Julia raster as a P6 pixmap plus metadata.
    Render,
    /// Raster, cycles and the density report.
    Density,
    /// Rescaling step table and consecutive-map distances.
    Renorm,
    /// Radial scan of |z - v| times the spherical derivative.
    Lehto,
    /// Periodic points from a seed lattice.
    Cycles,
}

#[derive(Debug, Parser)]
#[command(name = "julia-cycles", version = env!("CARGO_PKG_VERSION"), about = "Repelling cycles of meromorphic maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (0 = one per core). Does not affect outputs.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    pub workers: usize,
}

/// Output files for `command` under `cfg`, computed on a pool of `workers`.
pub fn execute(command: Command, cfg: &RunConfig, workers: usize) -> Result<Files, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| match command {
        Command::Render => run::run_render(cfg),
        Command::Density => run::run_density(cfg),
        Command::Renorm => run::run_renorm(cfg),
        Command::Lehto => run::run_lehto(cfg),
        Command::Cycles => run::run_cycles(cfg),
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_files(dir: &Path, files: &Files) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))
        .and_then(load_config)
        .and_then(|cfg| execute(cli.command, &cfg, cli.workers))
        .and_then(|files| {
            write_files(&cli.out, &files)?;
            Ok(files)
        });
    match result {
        Ok(files) => {
            for (name, _) in &files {
                println!("{}", cli.out.join(name).display());
            }
            0
        }
        Err(e) => {
            eprintln!("julia-cycles: {e}");
            e.exit_code()
        }
    }
}
