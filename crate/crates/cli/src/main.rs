//! `freqcast`: synthetic traces, truncation sweeps, collection-protocol
//! simulation and forecast training/evaluation from one binary.

mod experiment;
mod simulate;
mod synth;
mod train_eval;
mod truncate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "freqcast",
    version,
    about = "Fourier-truncated telemetry collection and forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each overrides the matching key of
/// the `--config` file.
#[derive(Args, Debug, Clone, Default)]
pub(crate) struct CommonArgs {
    /// Key-value config file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Energy threshold(s) in (0, 1], comma separated.
    #[arg(long, value_delimiter = ',')]
    pub e: Option<Vec<f64>>,
    /// RMSE bound(s), comma separated; selects the RMSE criterion.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Steps per batch (even).
    #[arg(long)]
    pub n: Option<usize>,
    /// Batches per input window.
    #[arg(long)]
    pub w: Option<usize>,
    /// Forecast horizon in steps (even).
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Seed for every random choice downstream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace CSV (`timestamp,machine_id,cpu_util,mem_util`).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic daily-seasonal trace CSV.
    Synth(CommonArgs),
    /// Sweep truncation thresholds over a trace; report savings and error.
    Truncate(CommonArgs),
    /// Run the batched collection protocol once; emit the report and the
    /// exact message stream.
    Simulate(CommonArgs),
    /// Train the frequency model per threshold plus the time-domain
    /// benchmark; report accuracy, latency and communication metrics.
    TrainEval(TrainEvalCli),
}

#[derive(Args)]
pub(crate) struct TrainEvalCli {
    #[command(flatten)]
    pub overrides: CommonArgs,
    /// Random-search trials per threshold (0 = use configured
    /// hyper-parameters directly).
    #[arg(long)]
    pub tune: Option<usize>,
    /// Training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => synth::run(&args),
        Command::Truncate(args) => truncate::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::TrainEval(args) => train_eval::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
