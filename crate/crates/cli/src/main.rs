mod commands;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use anarchy_lab::GameError;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "anarchy-lab",
    version,
    about = "Resource-allocation games with compromised agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance file.
    Gen(GenArgs),
    /// Check submodularity and the valid-utility conditions.
    Check(InstanceArgs),
    /// Enumerate pure Nash equilibria.
    Pne(InstanceArgs),
    /// Instance price of anarchy against the theoretical bound.
    Poa(InstanceArgs),
    /// Sweep a family over k and compare measured ratios with the bounds.
    Bounds(BoundsArgs),
    /// Search for low-ratio instances.
    Search(SearchArgs),
    /// Log-linear learning temperature sweep, written as CSV.
    Lll(LllArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Family {
    KBlind,
    McBlind,
    McNoblind,
    Sim,
    ThreeAgent,
    Random,
    Disabled,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Utility {
    Es,
    Mc,
    Mixed,
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Defaults to 0.05 for `sim`, 1e-6 otherwise.
    #[arg(long)]
    eps: Option<f64>,
    /// Defaults to `eps`.
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated labels for the compromised agents (default: all blind).
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<anarchy_lab::CompromiseLabel>>,
    /// Resource values: six for `three_agent`, one for `disabled`.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "es")]
    utility: Utility,
    #[arg(long, default_value_t = 4)]
    max_resources: usize,
    #[arg(long, default_value_t = 4)]
    max_actions: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct InstanceArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Largest joint action space to scan.
    #[arg(long)]
    cap: Option<u128>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mix {
    Blind,
    Isolated,
    Alternating,
    All,
}

#[derive(Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    n: Option<usize>,
    /// `K`, `A..B` (inclusive) or `k=A..B`.
    #[arg(long, value_parser = parse::k_range, conflicts_with = "sweep")]
    k: Option<std::ops::RangeInclusive<usize>>,
    /// Same as `--k`.
    #[arg(long, value_parser = parse::k_range)]
    sweep: Option<std::ops::RangeInclusive<usize>>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Label mixes to evaluate for each k.
    #[arg(long, value_enum, default_value = "all")]
    labels: Mix,
    /// Exclusive resource values for the `disabled` family.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    values: Vec<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
pub struct SearchArgs {
    /// JSON search configuration.
    #[arg(long)]
    config: PathBuf,
    /// Instance to start climbing from.
    #[arg(long)]
    start: Option<PathBuf>,
    /// Write the worst instance found here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
pub struct LllArgs {
    #[arg(long)]
    instance: PathBuf,
    /// `A:B:N(log)`, `A:B:N` or a comma-separated list.
    #[arg(long, value_parser = parse::temperatures)]
    temps: parse::Grid,
    #[arg(long, default_value_t = 200_000)]
    steps: u64,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leading steps excluded from the statistics.
    #[arg(long, default_value_t = 0)]
    burn_in: u64,
    /// JSON file with the initial profile, e.g. `[[0], [], [1, 2]]`.
    #[arg(long)]
    start: Option<PathBuf>,
    /// CSV output (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Missing or inconsistent arguments that clap cannot express.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_SIZE_CAP: u8 = 3;
pub const EXIT_BOUND_VIOLATION: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<GameError>() {
        Some(GameError::SizeCap { .. }) => EXIT_SIZE_CAP,
        Some(_) => EXIT_INVALID,
        None => EXIT_USAGE,
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("ANARCHY_LAB_THREADS") {
        let threads: usize = v.parse().map_err(|_| {
            UsageError(format!(
                "ANARCHY_LAB_THREADS must be a positive integer, got `{v}`"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Check(a) => commands::check(a),
        Command::Pne(a) => commands::pne(a),
        Command::Poa(a) => commands::poa(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Search(a) => commands::search(a),
        Command::Lll(a) => commands::lll(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
