//! `psym`: data generation, training, evaluation and integrator checks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{parse_interval, UsageError};

#[derive(Parser)]
#[command(name = "psym", version, about = "Learn Hamiltonian gradients through a pseudo-symplectic integrator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample trajectory pairs from a built-in system.
    GenData(GenDataArgs),
    /// Train a gradient network on a dataset.
    Train(TrainArgs),
    /// Integrate a trained network from an initial state.
    Predict(PredictArgs),
    /// Compare a trained network with the true system.
    Evaluate(EvaluateArgs),
    /// Symplecticity residual of the integrator over a step list.
    Sympcheck(SympcheckArgs),
    /// Global error of the integrator over a step list.
    OrderCheck(OrderCheckArgs),
    /// Run a named example end to end over several seeds.
    Repro(ReproArgs),
}

/// Every subcommand accepts a JSON file of the same keys as its resolved config.
#[derive(Args, Serialize)]
pub struct GenDataArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<String>,
    /// `lo:hi`, once per coordinate or once for all.
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    pub region: Option<Vec<[f64; 2]>>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Observation interval between the states of a pair.
    #[arg(long = "T", alias = "interval")]
    pub interval: Option<f64>,
    #[arg(long)]
    pub h_gen: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Integrator steps per observation interval (default: interval / h).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, alias = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub summands: Option<usize>,
    /// pade, taylor, pau or relu.
    #[arg(long)]
    pub activation: Option<String>,
    /// Numerator and denominator degrees, e.g. `3,2`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub degrees: Option<Vec<usize>>,
    /// Ascending coefficients of the fixed Padé denominator.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub denominator: Option<Vec<f64>>,
}

#[derive(Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Initial state, comma separated (default: the system's evaluation state).
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// pred-error, traj-error or energy.
    #[arg(long)]
    pub metric: Option<String>,
    /// Reference system (default: the checkpoint's).
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Final time (default 60, or 600 for traj-error).
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SympcheckArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<String>,
    /// `ps-rk` (the integrator) or `exact-rotation` (harmonic flow, a null check).
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub y: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub steps: Option<Vec<f64>>,
    /// Number of composed steps.
    #[arg(long)]
    pub compose: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct OrderCheckArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub steps: Option<Vec<f64>>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct ReproArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// example1 … example4.
    #[arg(long)]
    pub example: Option<String>,
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub seeds: Option<Vec<u64>>,
    /// `all` or `pade`.
    #[arg(long)]
    pub columns: Option<String>,
    /// Overrides the example's epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Steps of size 0.01 in the trajectory error.
    #[arg(long)]
    pub traj_steps: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sympcheck(a) => commands::sympcheck(a),
        Command::OrderCheck(a) => commands::order_check(a),
        Command::Repro(a) => commands::repro(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            eprintln!("run `psym --help` for usage");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
