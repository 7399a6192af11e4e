//! atfg: quadrotor attitude-control laboratory.
//!
//! Subcommands: `serve` (lock-step simulation server), `train` (PPO),
//! `evaluate` (metric suite for one agent), `compare` (several agents on
//! identical setpoints), `scaffold` (write the default config files).
//! Set `ATFG_LOG=debug` for verbose logging.

mod agent_spec;
mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit codes: 1 generic failure, 2 bind failure, 3 invalid config,
/// 4 missing file/checkpoint.
pub const EXIT_GENERIC: u8 = 1;
pub const EXIT_BIND: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_MISSING: u8 = 4;

#[derive(Parser)]
#[command(name = "atfg", version, about = "quadrotor attitude-control laboratory")]
struct Cli {
    /// Master seed; all random streams derive from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory for reports, traces, curves and manifests.
    #[arg(long, global = true, default_value = "runs/latest")]
    out: PathBuf,

    /// Aircraft config file (defaults to the built-in Iris-class plant).
    #[arg(long, global = true)]
    aircraft: Option<PathBuf>,

    /// Task config file (defaults to the built-in episodic task).
    #[arg(long, global = true)]
    task: Option<PathBuf>,

    /// Physics tick override, s.
    #[arg(long, global = true)]
    dt: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct EvalArgs {
    /// Number of evaluation episodes.
    #[arg(long, default_value_t = 1000)]
    episodes: usize,

    /// Report format printed to stdout.
    #[arg(long, value_parser = ["table", "json"], default_value = "table")]
    metrics: String,

    /// Write one trace CSV per episode.
    #[arg(long)]
    traces: bool,

    /// Rise-time thresholds as fractions of the initial error.
    #[arg(long, default_value_t = 0.10)]
    rise_low: f64,
    #[arg(long, default_value_t = 0.90)]
    rise_high: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Run the lock-step simulation server until interrupted.
    Serve {
        /// UDP bind address.
        #[arg(long, default_value = "127.0.0.1:5760")]
        bind: String,
    },
    /// Train PPO agents (one per seed) and write curves and checkpoints.
    Train {
        /// Trainer config file (defaults to the built-in desk-scale run).
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Evaluate one agent: "pid", "pid:<cfg>", "ppo:<checkpoint>" or "random".
    Evaluate {
        agent: String,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Evaluate several agents on identical setpoints, side by side.
    Compare {
        /// Agent specs, e.g. pid:configs/betaflight_port.cfg ppo:run/best.ckpt random
        #[arg(required = true)]
        agents: Vec<String>,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Write the default config files into the output directory.
    Scaffold,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ATFG_LOG", "info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Serve { bind } => commands::serve(&cli, bind),
        Command::Train { train } => commands::train(&cli, train.as_deref()),
        Command::Evaluate { agent, eval } => commands::evaluate(&cli, agent, eval),
        Command::Compare { agents, eval } => commands::compare(&cli, agents, eval),
        Command::Scaffold => commands::scaffold(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            log::error!("{err:#}");
            ExitCode::from(err.exit_code())
        }
    }
}

/// Error wrapper carrying the process exit code.
pub struct CliError {
    pub inner: anyhow::Error,
    pub code: u8,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.inner.fmt(f)
    }
}

impl std::fmt::Debug for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.inner.fmt(f)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(inner: anyhow::Error) -> Self {
        CliError { inner, code: EXIT_GENERIC }
    }
}

pub type CliResult = Result<(), CliError>;

pub fn fail(code: u8, err: anyhow::Error) -> CliError {
    CliError { inner: err, code }
}
