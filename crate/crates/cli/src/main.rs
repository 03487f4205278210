//! Batch front-end for the coordination laboratory.
//!
//! Exit status: 0 success, 1 property failure, 2 input error, 3 resource
//! error.

mod cmd_code;
mod cmd_fm;
mod cmd_region;
mod cmd_verify;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "coordlab", version, about = "Remote strong coordination: regions, FM elimination and small-blocklength codes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags accepted by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Input JSON document.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// State-space cap for exact enumeration.
    #[arg(long, global = true)]
    pub cap: Option<u128>,
    /// Monte Carlo trials per cell when the mode is `mc`.
    #[arg(long = "mc-trials", global = true)]
    pub mc_trials: Option<usize>,
    /// Error-probability mode: `exact` or `mc`.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Region membership and boundary sweeps.
    Region {
        #[command(subcommand)]
        op: cmd_region::RegionOp,
    },
    /// Fourier–Motzkin elimination.
    Fm(cmd_fm::FmArgs),
    /// Random-binning code experiments.
    Code {
        #[command(subcommand)]
        op: cmd_code::CodeOp,
    },
    /// Property suites.
    Verify(cmd_verify::VerifyArgs),
}

/// Error carrying the exit status it maps to.
#[derive(Debug)]
pub struct Exit {
    pub code: u8,
    pub message: String,
}

impl Exit {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn property(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<coordlab::Error> for Exit {
    fn from(e: coordlab::Error) -> Self {
        let code = match e.kind() {
            coordlab::ErrorKind::Resource => 3,
            _ => 2,
        };
        let mut message = e.to_string();
        if code == 3 {
            message.push_str(" (raise --cap or use --mode mc)");
        }
        Self { code, message }
    }
}

impl From<anyhow::Error> for Exit {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<coordlab::Error>() {
            Ok(c) => c.into(),
            Err(e) => Self::input(format!("{e:#}")),
        }
    }
}

pub type CmdResult = Result<(), Exit>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(j) = cli.common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let res = match cli.command {
        Command::Region { op } => cmd_region::run(op, &cli.common),
        Command::Fm(a) => cmd_fm::run(a, &cli.common),
        Command::Code { op } => cmd_code::run(op, &cli.common),
        Command::Verify(a) => cmd_verify::run(a, &cli.common),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
