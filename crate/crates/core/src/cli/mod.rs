//! `pour-rnn` command-line front end.
//!
//! Every command is a pure function of its flags, seed and input files.
//! `--config FILE` reads `key=value` lines (`#` comments allowed) that act
//! as if they were given as `--key value` right after the subcommand;
//! flags on the command line override them.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

mod commands;
mod config;
mod grid;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::nn::{Activation, CellKind};
use crate::train::LossKind;
use crate::Error;

pub use config::{expand_config, parse_config};
pub use grid::{parse_gridspec, GridCombo, DEFAULT_GRIDSPEC};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pour-rnn",
    version,
    about = "Pouring weight-response estimation with recurrent networks"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Plain-text key=value file of default flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate pouring trials and write a dataset.
    Generate(GenerateArgs),
    /// Split a dataset into train/validation/test ids.
    Split(SplitArgs),
    /// Train a model and write checkpoint, history and run manifest.
    Train(TrainArgs),
    /// Train every combination of a grid and report final losses.
    Grid(GridArgs),
    /// Evaluate a checkpoint on a dataset or one of its splits.
    Evaluate(EvaluateArgs),
    /// Export actual vs predicted weight series for selected records.
    Predict(PredictArgs),
    /// Compare backpropagation against finite differences on a small model.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Regime {
    /// Everyday cup sizes.
    In,
    /// Cups twice as large.
    Out,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of trials.
    #[arg(long)]
    pub n: usize,
    /// Dataset path (default: <out-dir>/data.jsonl).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Regime::In)]
    pub regime: Regime,
    /// JSON file of sampling intervals; overrides --regime.
    #[arg(long)]
    pub ranges: Option<PathBuf>,
    /// Gaussian weight noise, lbf.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 400)]
    pub min_len: usize,
    #[arg(long, default_value_t = 1099)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Dataset to split.
    #[arg(long)]
    pub data: PathBuf,
    /// Manifest path (default: <out-dir>/split.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Share of records used for training.
    #[arg(long, default_value_t = 0.8)]
    pub train_ratio: f64,
    /// Share of the remainder used for validation.
    #[arg(long, default_value_t = 0.7)]
    pub val_ratio: f64,
}

/// Optimizer and data options shared by `train` and `grid`.
#[derive(Debug, Clone, Args)]
pub struct OptimArgs {
    /// Dataset file.
    #[arg(long)]
    pub data: PathBuf,
    /// Split manifest written by `split`.
    #[arg(long)]
    pub splits: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Stop after this many epochs without validation improvement.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    /// Clip the gradient to this global L2 norm.
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Train on raw values instead of min-max scaled ones.
    #[arg(long)]
    pub raw: bool,
    /// Padding length (default: longest record).
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Record wall time per epoch (makes histories non-reproducible).
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub optim: OptimArgs,
    #[arg(long, value_enum, default_value_t = LossArg::Euclidean)]
    pub loss: LossArg,
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    /// Recurrent cell used in every recurrent layer.
    #[arg(long, value_enum, default_value_t = CellArg::Lstm)]
    pub cell: CellArg,
    /// Activation of both dense layers.
    #[arg(long, value_enum, default_value_t = ActivationArg::Relu)]
    pub activation: ActivationArg,
    /// JSON model spec; overrides --cell and --activation.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Grid file (default: the bundled seven-combination grid).
    #[arg(long)]
    pub gridspec: Option<PathBuf>,
    /// Multiplier applied to every combination's epoch count.
    #[arg(long, default_value_t = 1.0)]
    pub epoch_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subset {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Split manifest; needed for --split train/val/test.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Subset::All)]
    pub split: Subset,
    #[arg(long, value_enum, default_value_t = LossArg::Euclidean)]
    pub loss: LossArg,
    /// Metrics path (default: <out-dir>/metrics.tsv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated record ids.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ids: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub h: f64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Mse,
    Euclidean,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Mse => LossKind::Mse,
            LossArg::Euclidean => LossKind::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CellArg {
    Lstm,
    Gru,
}

impl From<CellArg> for CellKind {
    fn from(c: CellArg) -> Self {
        match c {
            CellArg::Lstm => CellKind::Lstm,
            CellArg::Gru => CellKind::Gru,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ActivationArg {
    Relu,
    Linear,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Relu => Activation::Relu,
            ActivationArg::Linear => Activation::Linear,
        }
    }
}

/// Failure of a command, with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = exit_code(&e);
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::NonFinite(_) | Error::Diverged { .. } => EXIT_NUMERICAL,
        Error::Shape(_)
        | Error::InvalidRecord { .. }
        | Error::RecordTooLong { .. }
        | Error::Parse { .. }
        | Error::Io { .. } => EXIT_DATA,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Messages go to stdout/stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
