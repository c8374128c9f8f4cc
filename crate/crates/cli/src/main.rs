//! `gauss-extremes`: limit-law tables, Monte Carlo verification, Pickands
//! ladders and field dumps.

mod config;
mod limits;
mod output;
mod pickands;
mod simulate;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{FileConfig, Format};

/// Exit codes.
pub const EXIT_GATE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: EXIT_RUNTIME, message: message.into() }
    }
}

impl From<gauss_extremes::Error> for Failure {
    fn from(e: gauss_extremes::Error) -> Self {
        use gauss_extremes::Error::*;
        let code = match e {
            InvalidParameter(_) | InvalidLadder(_) | RadiusTooSmall(_) | AlignmentError(_) | InvalidMix(_)
            | NotDisjoint(..) | LadderTooShort(_) | Nonintegrable(_) | MissingMoment | MissingSurvival
            | EmptyRegion => EXIT_CONFIG,
            EmbeddingFailure { .. }
            | MemoryCap { .. }
            | NotInAsymptoticRegime(_)
            | NoRoot(_)
            | UnstableRegime { .. }
            | Io(_)
            | Format(_) => EXIT_RUNTIME,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(e.to_string())
    }
}

pub type CmdResult<T> = Result<T, Failure>;

#[derive(Debug, Parser)]
#[command(name = "gauss-extremes", version, about = "Extremes of 2-D Gaussian random fields")]
struct Cli {
    /// TOML config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Stdout format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tables of limit laws, radial constants, tails and thresholds.
    Limits(limits::LimitsArgs),
    /// Monte Carlo experiments with pass/fail gates (needs --config).
    Verify,
    /// Pickands constant ladder.
    Pickands(pickands::PickandsArgs),
    /// Sample one field and write it in the binary field format.
    Simulate(simulate::SimulateArgs),
}

/// Settings shared by every command after merging flags over the file.
#[derive(Debug, Clone)]
pub struct Common {
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn run(cli: Cli) -> CmdResult<u8> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let common = Common {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        workers: cli.workers.or(file.workers).unwrap_or(0),
        out: cli.out.clone().or(file.out.clone()),
        format: cli.format.or(file.format).unwrap_or_default(),
    };
    match cli.command {
        Command::Limits(args) => limits::run(args.merged(file.limits.unwrap_or_default()), &common),
        Command::Verify => {
            let section = file.verify.ok_or_else(|| Failure::config("verify needs a [verify] section in --config"))?;
            let seed_given = cli.seed.or(file.seed);
            verify::run(section, seed_given, &common)
        }
        Command::Pickands(args) => pickands::run(args.merged(file.pickands.unwrap_or_default()), &common),
        Command::Simulate(args) => simulate::run(args.merged(file.simulate.unwrap_or_default()), &common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
