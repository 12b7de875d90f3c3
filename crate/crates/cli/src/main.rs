//! `hardy`: point sets, convergence runs, decompositions, min-norm fields and
//! BEP sweeps.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "hardy", version, about = "Hardy-space dictionary experiments on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the nested Fibonacci point sets (and optionally the Gauss grid).
    GenPoints {
        #[command(flatten)]
        common: Common,
        /// Also write the Gauss grid used by `decompose --field`.
        #[arg(long)]
        grid: bool,
    },
    /// Fit the benchmark field for levels 1..nmax and write the error table.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Hardy-Hodge decomposition of the benchmark field or of a sampled field.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// CSV of x,y,z,vx,vy,vz on the grid written by `gen-points --grid`.
        #[arg(long, value_name = "PATH")]
        field: Option<PathBuf>,
    },
    /// Minimum-norm field from the level-nmax fit, with diagnostics.
    Minnorm {
        #[command(flatten)]
        common: Common,
    },
    /// Bounded extremal problem sweep at level nmax.
    Bep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// S1, S2, S3, all or custom.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    nmax: Option<usize>,
    /// Truncation degree, 100 or 200.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Lift the level cap of 4.
    #[arg(long)]
    allow_large: bool,
    /// Override any configuration key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                ExperimentConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => ExperimentConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            c.set(k.trim(), v.trim()).map_err(CliError::Config)?;
        }
        if let Some(s) = &self.sigma {
            c.set("sigma", s).map_err(CliError::Config)?;
        }
        if let Some(n) = self.nmax {
            c.nmax = n;
        }
        if let Some(d) = self.degree {
            c.degree = d;
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        c.allow_large |= self.allow_large;
        c.validate().map_err(CliError::Config)?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenPoints { common, grid } => commands::gen_points(&common.resolve()?, grid),
        Command::Convergence { common } => commands::convergence(&common.resolve()?),
        Command::Decompose { common, field } => commands::decompose(&common.resolve()?, field.as_ref()),
        Command::Minnorm { common } => commands::minnorm(&common.resolve()?),
        Command::Bep { common } => commands::bep(&common.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hardy: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
