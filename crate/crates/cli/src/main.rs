//! `quantseg`: fit, segment, select the number of change-points, simulate, and
//! reproduce the simulation tables from the command line.
//!
//! Exit codes: 0 success, 1 bad input (arguments, files, parsing), 2 solver
//! failure, 3 a `kkt-check` that found violations.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quantseg_core::adaptive::LambdaRule;
use quantseg_core::Error;

#[derive(Parser, Debug)]
#[command(name = "quantseg", version, about = "Adaptive-LASSO quantile regression with change-point estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit one regression on the whole sample.
    Fit(FitArgs),
    /// Best segmentation with a fixed number of change-points.
    Segment(SegmentArgs),
    /// Choose the number of change-points by the information criterion.
    SelectK(SelectKArgs),
    /// Draw a dataset from a built-in or custom design.
    Simulate(SimulateArgs),
    /// Rerun one of the simulation tables or figures.
    Reproduce(ReproduceArgs),
    /// Check the optimality conditions of a saved adaptive fit.
    KktCheck(KktCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethodArg {
    /// Unpenalized quantile regression.
    Quantile,
    AlassoQuantile,
    LsAlasso,
    LadLassotype,
    Scad,
}

#[derive(Args, Debug)]
pub struct AdaptiveArgs {
    /// Weight exponent of the adaptive penalty.
    #[arg(long, default_value_t = 1.225)]
    pub g: f64,
    /// Penalty multiplier as a function of the sample size m: `power:E` for m^E or `constant:C`.
    #[arg(long, default_value = "power:0.4", value_parser = parse_lambda_rule)]
    pub lambda_rule: LambdaRule,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV with header `y,x1,...,xp`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = FitMethodArg::AlassoQuantile)]
    pub method: FitMethodArg,
    #[command(flatten)]
    pub adaptive: AdaptiveArgs,
    /// Weight exponent of the least-squares adaptive LASSO.
    #[arg(long, default_value_t = 0.225)]
    pub chi: f64,
    /// SCAD shape parameter.
    #[arg(long, default_value_t = 5.0)]
    pub scad_a1: f64,
    /// Iteration limit of the SCAD local linear approximation.
    #[arg(long, default_value_t = 50)]
    pub scad_max_iter: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SegmentMethodArg {
    AlassoQuantile,
    LsAlasso,
    LadLassotype,
}

#[derive(Args, Debug)]
pub struct SegmentationArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.55)]
    pub tau: f64,
    /// Shortest admissible segment; defaults to max(p + 2, ceil(n^0.51)).
    #[arg(long)]
    pub min_len: Option<usize>,
    #[arg(long, value_enum, default_value_t = SegmentMethodArg::AlassoQuantile)]
    pub method: SegmentMethodArg,
    #[command(flatten)]
    pub adaptive: AdaptiveArgs,
    #[arg(long, default_value_t = 0.225)]
    pub chi: f64,
    /// Quantile level of the QLASSO pilot used by lad-lassotype.
    #[arg(long, default_value_t = 0.5)]
    pub pilot_tau: f64,
    /// Worker threads; the result does not depend on it.
    #[arg(long, default_value_t = default_jobs())]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub seg: SegmentationArgs,
    /// Number of change-points.
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SelectKArgs {
    #[command(flatten)]
    pub seg: SegmentationArgs,
    #[arg(long, default_value_t = 3)]
    pub k_max: usize,
    /// Exponent of the criterion's penalty scale n^e.
    #[arg(long, default_value_t = 0.625)]
    pub bn_exponent: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Catalog name or path to a design JSON file.
    #[arg(long)]
    pub design: String,
    #[arg(long, env = "QUANTSEG_SEED")]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub replication: u64,
    /// Dataset CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth JSON; defaults to the dataset path with extension `truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(id = "target", required = true, multiple = false)]
pub struct TargetArgs {
    /// 1, 2, 3, 5, 5bis, 6, 6bis or 7.
    #[arg(long, group = "target")]
    pub table: Option<String>,
    /// 4, 5, 6 or 7.
    #[arg(long, group = "target")]
    pub figure: Option<String>,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Replications per experiment; defaults to the checked-in configuration.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; defaults to the checked-in configuration.
    #[arg(long, env = "QUANTSEG_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; the report does not depend on it.
    #[arg(long, default_value_t = default_jobs())]
    pub jobs: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct KktCheckArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Output of `fit --method alasso-quantile` or `quantile`, or a bare fit result.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Check against the unpenalized problem instead of rebuilding the adaptive penalty.
    #[arg(long)]
    pub unpenalized: bool,
    #[command(flatten)]
    pub adaptive: AdaptiveArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_lambda_rule(s: &str) -> Result<LambdaRule, String> {
    let (kind, value) = s.split_once(':').ok_or_else(|| format!("expected power:E or constant:C, got {s:?}"))?;
    let value: f64 = value.parse().map_err(|_| format!("cannot parse {value:?} as a number"))?;
    match kind {
        "power" => Ok(LambdaRule::Power { exponent: value }),
        "constant" => Ok(LambdaRule::Constant { value }),
        _ => Err(format!("unknown lambda rule {kind:?}; use power or constant")),
    }
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::Csv { .. }
            | Error::Io { .. }
            | Error::Json(_)
            | Error::Unknown { .. }
            | Error::InadmissibleBreaks(_) => 1,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version go to standard output and are not errors.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
