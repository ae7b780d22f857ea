use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

mod commands;
mod config;
mod output;

use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: mtlab::error::Error,
    },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<mtlab::error::Error> for CliError {
    fn from(e: mtlab::error::Error) -> Self {
        match e {
            mtlab::error::Error::Io(io) => CliError::Io(io),
            other => CliError::Core {
                context: "solver".into(),
                source: other,
            },
        }
    }
}

impl CliError {
    /// 2 for convergence failures, 3 for bad input, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use mtlab::error::Error as E;
        match self {
            CliError::Config(_) => 3,
            CliError::Solver(_) => 2,
            CliError::Core { source, .. } if source.is_convergence_failure() => 2,
            CliError::Core { source, .. } => match source {
                E::InvalidArgument(_)
                | E::InvalidDimension(_)
                | E::DimensionMismatch { .. }
                | E::Parse(_)
                | E::Unresolved(_)
                | E::SampleRadius { .. }
                | E::TooFewSamples { .. }
                | E::InfiniteCapacity
                | E::EmptyBand { .. } => 3,
                _ => 1,
            },
            CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core { .. } => "core",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
        }
    }
}

/// Attaches a context line to core errors.
pub trait Context<T> {
    fn ctx(self, context: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for mtlab::error::Result<T> {
    fn ctx(self, context: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|e| match e {
            mtlab::error::Error::Io(io) => CliError::Io(io),
            source => CliError::Core {
                context: context.into(),
                source,
            },
        })
    }
}

#[derive(Parser)]
#[command(name = "mtlab", version, about = "Numerical experiments for the Neumann Moser-Trudinger problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Primary tolerance of the command.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// First nonzero Neumann eigenvalue, optionally over a mesh ladder.
    Eigen,
    /// Subcritical maximizers along the epsilon schedule, with blow-up diagnostics.
    Maximize,
    /// Neumann Green function, A_p and the remainder fit.
    Green,
    /// Test-function lower bound against the capacity upper bound.
    Bounds,
    /// Radial bubble profile, residual and mass.
    Bubble,
    /// Capacity formula and discrete checks.
    Capacity,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Maximize => "maximize",
            Command::Green => "green",
            Command::Bounds => "bounds",
            Command::Bubble => "bubble",
            Command::Capacity => "capacity",
        }
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    command: &'a str,
    config_hash: Option<String>,
    exit_code: u8,
    kind: &'a str,
    message: String,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = cli.tol {
        match cli.command {
            Command::Eigen => cfg.solver.eigen_tol = tol,
            Command::Maximize => cfg.solver.maximize_tol = tol,
            Command::Green | Command::Bounds | Command::Capacity => cfg.solver.green_tol = tol,
            Command::Bubble => cfg.bubble.residual_step = tol,
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Eigen => commands::eigen(cfg),
        Command::Maximize => commands::maximize(cfg),
        Command::Green => commands::green(cfg),
        Command::Bounds => commands::bounds(cfg),
        Command::Bubble => commands::bubble(cfg),
        Command::Capacity => commands::capacity(cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    let cfg = load(&cli);
    let result = cfg.as_ref().map_err(|e| CliError::Config(e.to_string())).and_then(|c| run(&cli, c));
    let Err(err) = result else {
        return ExitCode::SUCCESS;
    };
    let code = err.exit_code();
    eprintln!("mtlab {name}: {err}");
    let dir = match &cfg {
        Ok(c) => Some(c.out.clone()),
        Err(_) => cli.out.clone(),
    };
    if let Some(dir) = dir {
        let record = ErrorRecord {
            command: name,
            config_hash: cfg.as_ref().ok().map(|c| c.hash()),
            exit_code: code,
            kind: err.kind(),
            message: err.to_string(),
        };
        if std::fs::create_dir_all(&dir).is_ok() {
            if let Ok(text) = serde_json::to_string_pretty(&record) {
                let _ = std::fs::write(dir.join(format!("{name}.error.json")), text + "\n");
            }
        }
    }
    ExitCode::from(code)
}
