//! Command-line front end for the entropic transport library.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod diagnose;
pub mod expr;
pub mod output;
mod solve;

use config::{Backend, Config, Overrides, Problem};
use diagnose::Suite;
use output::OutDir;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {message} (state written to {})", dump.display())]
    Numerical { message: String, dump: PathBuf },

    #[error("diagnostic suite {suite} failed: {}", failures.join("; "))]
    SuiteFailure { suite: String, failures: Vec<String> },

    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::SuiteFailure { .. } => 1,
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "eot", version, about = "Entropic optimal transport by scaled Sinkhorn iterations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub backend: Option<Backend>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Rescale point-cloud weights to unit mass.
    #[arg(long, global = true)]
    pub renormalize: bool,

    #[arg(long, global = true)]
    pub k: Option<f64>,

    /// Step budget constant `A` in `m_max = ceil(A k ln k)`.
    #[arg(long = "schedule-A", global = true)]
    pub schedule_a: Option<f64>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Stopping tolerance on the sup change of the potential.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a transport problem and write potentials, trace and summary.
    Transport {
        #[command(subcommand)]
        manifold: Manifold,
    },
    /// Solve the reflector antenna problem on the sphere.
    Antenna,
    /// Integrate the parabolic reference flow on the torus.
    Parabolic,
    /// Run a diagnostic suite; exits with status 1 if a check fails.
    Diagnose {
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Manifold {
    Torus,
    Sphere,
}

impl Command {
    fn problem(&self) -> Problem {
        match self {
            Command::Transport { manifold: Manifold::Torus } => Problem::TransportTorus,
            Command::Transport { manifold: Manifold::Sphere } => Problem::TransportSphere,
            Command::Antenna => Problem::Antenna,
            Command::Parabolic => Problem::Parabolic,
            Command::Diagnose { .. } => Problem::Diagnose,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let mut cfg = Config::load(g.config.as_deref())?;
    cfg.apply(&Overrides {
        backend: g.backend,
        k: g.k,
        schedule_a: g.schedule_a,
        threads: g.threads,
        renormalize: g.renormalize,
        seed: g.seed,
        tol: g.tol,
    });
    cfg.resolve(cli.command.problem())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    cfg.threads = Some(pool.current_num_threads());
    let out = OutDir::create(&g.out)?;
    pool.install(|| match &cli.command {
        Command::Transport { manifold } => commands::transport(&cfg, &out, matches!(manifold, Manifold::Sphere)),
        Command::Antenna => commands::antenna(&cfg, &out),
        Command::Parabolic => commands::parabolic(&cfg, &out),
        Command::Diagnose { suite } => diagnose::diagnose(*suite, &cfg, &out),
    })
}
