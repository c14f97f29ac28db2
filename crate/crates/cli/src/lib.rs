//! Command-line front end for netsel: TOML-configured experiments, sweeps,
//! simulations and figure datasets written as CSV with JSON sidecars.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::figures::Figure;
use crate::output::OutputDir;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NETSEL_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "netsel-out";

#[derive(Debug, Parser)]
#[command(
    name = "netsel",
    version,
    about = "Primary/secondary network selection under imitation dynamics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML experiment configuration; reference setup when omitted
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory [default: config `output_dir`, then $NETSEL_OUT_DIR, then ./netsel-out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Seed for Monte Carlo runs, overriding the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Print nothing but errors
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Also write a gnuplot script next to every CSV
    #[arg(long, global = true)]
    pub gnuplot: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium split, k*, total delay and PoA
    Equilibrium,
    /// Exact stationary law (or absorption report) as `k,psi`
    Stationary,
    /// PoA or expected PoA over a `[sweep]` range
    Sweep,
    /// Monte Carlo run of the chain described by `[simulation]`
    Simulate,
    /// Deterministic mean dynamics from each `[replicator]` initial share
    Replicator,
    /// Datasets behind the published figures
    Reproduce {
        #[arg(required = true, value_enum)]
        figures: Vec<Figure>,
    },
}

impl Cli {
    fn output_dir(&self, config: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| config.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn execute(self) -> Result<(), CliError> {
        let config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let out = OutputDir::create(self.output_dir(&config), self.gnuplot)?;
        let mut ctx = Context {
            config,
            out,
            seed: self.seed,
            quiet: self.quiet,
        };
        match &self.command {
            Command::Equilibrium => commands::equilibrium(&mut ctx)?,
            Command::Stationary => commands::stationary(&mut ctx)?,
            Command::Sweep => commands::sweep(&mut ctx)?,
            Command::Simulate => commands::simulate(&mut ctx)?,
            Command::Replicator => commands::replicator(&mut ctx)?,
            Command::Reproduce { figures } => {
                for &figure in figures {
                    figures::reproduce(figure, &mut ctx.out)?;
                }
            }
        }
        if !self.quiet {
            for path in ctx.out.written() {
                println!("wrote {}", path.display());
            }
        }
        Ok(())
    }
}
