//! Experiment harness for the `tgt` binary.
//!
//! [`run`] parses arguments, resolves parameters (flag, then `--config`
//! file, then default), dispatches and writes the [`RunRecord`]. All
//! randomness is derived from `--seed` through
//! [`tgt_core::stream::derive_stream`], so a fixed seed gives byte-identical
//! output.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3
//! algorithmic failure (no size classes, failed self-test).

pub mod commands;
pub mod lb;
pub mod params;
pub mod record;
pub mod suites;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use tgt_core::estimator::EstimatorError;
use tgt_core::lab::LabError;
use tgt_core::oracle::OracleError;

use params::Params;
pub use record::{Format, RunRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("algorithmic failure: {0}")]
    Algorithm(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Algorithm(_) => 3,
        }
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        if e.is_config_error() {
            Self::Config(e.to_string())
        } else {
            Self::Algorithm(e.to_string())
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        if e.is_config_error() {
            Self::Config(e.to_string())
        } else {
            Self::Algorithm(e.to_string())
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        Self::Config(e.to_string())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Keyvalue => "keyvalue",
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "tgt", version, about = "Threshold group-testing estimation and lower-bound experiments")]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the record here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// `key=value` file; keys are the long flag names. Flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the calibrated estimator constants.
    Calibrate(EstimatorArgs),
    /// Seeded estimator trials, one row per trial.
    Estimate(EstimateArgs),
    /// Lower-bound laboratory.
    #[command(subcommand)]
    Lb(LbCommand),
    /// Exact hypergeometric pmf and tails with the Markov and Chernoff bounds.
    Tails(TailsArgs),
    /// Small exact suites; exits 3 if any check fails.
    Selftest,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub lambda: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Promise lower bound L.
    #[arg(long)]
    pub l: Option<u64>,
    /// Promise upper bound U.
    #[arg(long)]
    pub u: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// For lambda = 1 and L < d': add the small-d gate and singleton queries.
    /// Bare `--singleton-fallback` means `true`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub singleton_fallback: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    /// `plan` when the plan is small enough to materialize, else `counts`.
    Auto,
    /// Draw the full plan and query a uniform defect set.
    Plan,
    /// Sample the per-level hit counts directly.
    Counts,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub est: EstimatorArgs,
    /// Comma-separated true sizes; defaults to powers of 4 inside [L, U] plus U.
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
}

#[derive(Debug, Clone, Args)]
pub struct ClassArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub l: Option<u64>,
    #[arg(long)]
    pub u: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Arith {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TvMode {
    Exact,
    Mc,
}

macro_rules! value_enum_str {
    ($($t:ty),*) => {$(
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
            }
        }
    )*};
}
value_enum_str!(Arith, TvMode, Backend);

#[derive(Debug, Subcommand)]
pub enum LbCommand {
    /// The interleaved size classes and their α-windows.
    BuildClasses(ClassArgs),
    /// Per-level disagreement of a size-k query.
    Disagreement(DisagreementArgs),
    /// Low/mid/high bucket sums against their analytic bounds.
    Buckets(BucketArgs),
    /// Induced distributions of a plan, their distance and the coupling bound.
    Tv(TvArgs),
    /// Fix the estimator's seed and measure the resulting distinguisher.
    Derandomize(DerandomizeArgs),
    /// Coupled marginals against independently sampled induced distributions.
    Pushforward(PlanArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DisagreementArgs {
    #[command(flatten)]
    pub classes: ClassArgs,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub lambda: Option<u32>,
    #[arg(long, value_enum)]
    pub arith: Option<Arith>,
}

#[derive(Debug, Clone, Args)]
pub struct BucketArgs {
    #[command(flatten)]
    pub classes: ClassArgs,
    #[arg(long)]
    pub n: Option<u64>,
    /// Comma-separated query sizes.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub lambda: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub classes: ClassArgs,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub lambda: Option<u32>,
    /// Plan file in the text format; otherwise `queries` random queries of
    /// uniformly random size are drawn.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct TvArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long, value_enum)]
    pub mode: Option<TvMode>,
}

#[derive(Debug, Clone, Args)]
pub struct DerandomizeArgs {
    #[command(flatten)]
    pub est: EstimatorArgs,
    /// Candidate seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Mixture trials per candidate.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Samples per parity for the final advantage estimate.
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct TailsArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub s: Option<u64>,
}

/// Shared settings every command receives.
pub struct Context {
    pub seed: u64,
    pub params: Params,
}

fn dispatch(command: &Command, ctx: &Context) -> Result<RunRecord, CliError> {
    match command {
        Command::Calibrate(a) => commands::calibrate(a, ctx),
        Command::Estimate(a) => commands::estimate(a, ctx),
        Command::Tails(a) => commands::tails(a, ctx),
        Command::Selftest => commands::selftest(ctx),
        Command::Lb(lb) => match lb {
            LbCommand::BuildClasses(a) => lb::build_classes(a, ctx),
            LbCommand::Disagreement(a) => lb::disagreement(a, ctx),
            LbCommand::Buckets(a) => lb::buckets(a, ctx),
            LbCommand::Tv(a) => lb::tv(a, ctx),
            LbCommand::Derandomize(a) => lb::derandomize(a, ctx),
            LbCommand::Pushforward(a) => lb::pushforward(a, ctx),
        },
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => params::read_config(path)?,
        None => Default::default(),
    };
    let params = Params::new(file);
    let seed = params.get("seed", cli.seed, 0)?;
    let format = params.get("format", cli.format, Format::Csv)?;
    let ctx = Context { seed, params };
    let record = dispatch(&cli.command, &ctx)?;
    let body = record.render(format);
    match &cli.out {
        Some(path) => std::fs::write(path, body.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => stdout.write_all(body.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?,
    }
    if format == Format::Csv {
        stderr.write_all(record.keyvalue().as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    }
    match &record.failure {
        Some(msg) => Err(CliError::Algorithm(msg.clone())),
        None => Ok(()),
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "tgt: {e}");
            e.exit_code()
        }
    }
}
