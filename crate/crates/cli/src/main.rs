use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use krrpm::cps::Variant;
use krrpm::validation::{Generator, CURVE_POINTS, SPAN_IQR};

mod commands;
mod data;
mod error;

#[derive(Parser)]
#[command(name = "krrpm", version, about = "Conformal predictive distributions from kernel ridge regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit on a training CSV and write a predictive distribution per test object.
    Predict(PredictArgs),
    /// Monte Carlo check that the PIT values are uniform.
    Calibrate(CalibrateArgs),
    /// Regenerate the curve tables of one of the built-in experiments.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelName {
    Linear,
    Laplacian,
    Trig2d,
    Precomputed,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "laplacian")]
    kernel: KernelName,
    /// Length scale of the Laplacian kernel.
    #[arg(long)]
    scale: Option<f64>,
    /// Headerless square kernel matrix for `--kernel precomputed`; feature
    /// `x1` then holds each object's row index.
    #[arg(long)]
    gram: Option<PathBuf>,
    /// Ridge parameter.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, value_parser = parse_variant, default_value = "studentized")]
    variant: Variant,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "KRRPM_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Training CSV: header, x1..xd, y.
    #[arg(long)]
    train: PathBuf,
    /// Test CSV: header, x1..xd.
    #[arg(long, required_unless_present = "at")]
    test: Option<PathBuf>,
    /// Inline test object "x1,x2,..."; repeatable.
    #[arg(long)]
    at: Vec<String>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Noise level; also writes the Gaussian-process predictive CDF.
    #[arg(long)]
    sigma: Option<f64>,
    /// Curve grid extends this many interquartile ranges past the extreme critical values.
    #[arg(long, default_value_t = SPAN_IQR)]
    span_iqr: f64,
    #[arg(long, default_value_t = CURVE_POINTS)]
    points: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
pub struct CalibrateArgs {
    #[arg(long, value_parser = parse_generator, default_value = "trig")]
    generator: Generator,
    /// Training set size per trial.
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Fail when the KS statistic is not below this; defaults to the 5% critical value.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

#[derive(Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    figure: Figure,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training set size; defaults to 1000 for fig1 and fig2 and 10 for fig3.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = CURVE_POINTS)]
    points: usize,
    #[command(flatten)]
    out: OutArgs,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: krrpm::Error| e.to_string())
}

fn parse_generator(s: &str) -> Result<Generator, String> {
    s.parse().map_err(|e: krrpm::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Predict(args) => commands::predict(&args),
        Command::Calibrate(args) => commands::calibrate(&args),
        Command::Experiment(args) => commands::experiment(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
