//! `ssp` — experiment driver for the stochastic Stefan problem solver.
//!
//! Subcommands: `mesh-info`, `diagnostics`, `run`, `convergence`, `mushy`.
//! Configuration comes from a flat `key = value` file plus command-line
//! overrides; all randomness is controlled by the seed. Exit codes: 0 on
//! success, 1 on configuration errors, 2 on numerical failures.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::KeyMap;

/// A failure, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, missing files, malformed requests (exit 1).
    #[error("{0}")]
    Config(String),
    /// The mathematics failed: divergence, overflow, path aborts (exit 2).
    #[error("{0}")]
    Numerics(String),
}

#[derive(Parser)]
#[command(name = "ssp", version, about = "Stochastic Stefan problem experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every config-driven subcommand.
#[derive(Args)]
struct ConfigArgs {
    /// Configuration file with flat `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set seed=42`; repeatable, wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for `--set seed=N`.
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for `--set out=DIR`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Dedicated single-run overrides on top of the shared options.
#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    base: ConfigArgs,
    /// Problem id (1 or 2).
    #[arg(long)]
    test: Option<u32>,
    /// Mesh file.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Scheme: mlp1 or hmm.
    #[arg(long)]
    scheme: Option<String>,
    /// Cell-mass parameter of the hybrid scheme.
    #[arg(long)]
    r: Option<f64>,
    /// Noise factor.
    #[arg(long)]
    nf: Option<f64>,
    /// Path index within the seed's stream.
    #[arg(long)]
    path: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Print mesh sizes and entity counts.
    MeshInfo {
        /// Mesh files to summarise.
        meshes: Vec<PathBuf>,
    },
    /// Print consistency, conformity, and Poincaré diagnostics.
    Diagnostics(ConfigArgs),
    /// Simulate one noise path and write a per-step CSV.
    Run(Box<RunArgs>),
    /// Monte Carlo convergence study; writes error and norm tables.
    Convergence(ConfigArgs),
    /// Mushy-region statistics over a noise-factor sweep.
    Mushy(ConfigArgs),
}

impl ConfigArgs {
    /// File config plus overrides, flags winning over `--set`.
    fn key_map(&self) -> Result<KeyMap, CliError> {
        let mut map = match &self.config {
            Some(path) => KeyMap::load(path)?,
            None => KeyMap::default(),
        };
        map.apply_overrides(&self.set)?;
        if let Some(seed) = self.seed {
            map.set("seed", &seed.to_string())?;
        }
        if let Some(out) = &self.out {
            map.set("out", &out.to_string_lossy())?;
        }
        Ok(map)
    }
}

impl RunArgs {
    fn key_map(&self) -> Result<KeyMap, CliError> {
        let mut map = self.base.key_map()?;
        if let Some(test) = self.test {
            map.set("test", &test.to_string())?;
        }
        if let Some(mesh) = &self.mesh {
            map.set("mesh", &mesh.to_string_lossy())?;
        }
        if let Some(scheme) = &self.scheme {
            map.set("scheme", scheme)?;
        }
        if let Some(r) = self.r {
            map.set("r", &r.to_string())?;
        }
        if let Some(nf) = self.nf {
            map.set("nf", &nf.to_string())?;
        }
        if let Some(path) = self.path {
            map.set("path", &path.to_string())?;
        }
        Ok(map)
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::MeshInfo { meshes } => {
            print!("{}", commands::mesh_info(&meshes)?);
            Ok(())
        }
        Command::Diagnostics(args) => {
            print!("{}", commands::diagnostics(&args.key_map()?)?);
            Ok(())
        }
        Command::Run(args) => report_files(commands::run(&args.key_map()?)?),
        Command::Convergence(args) => report_files(commands::convergence(&args.key_map()?)?),
        Command::Mushy(args) => report_files(commands::mushy(&args.key_map()?)?),
    }
}

fn report_files(files: Vec<std::path::PathBuf>) -> Result<(), CliError> {
    for file in files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerics(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
