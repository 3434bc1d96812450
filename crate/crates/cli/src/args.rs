use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use etngen::dynamics::StartPolicy;
use etngen::metrics::DistanceKind;
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "etngen", version, about = "Surrogate temporal networks from egocentric temporal neighborhoods")]
pub struct Cli {
    /// Worker threads; all cores when unset.
    #[arg(long, global = true, env = "ETNGEN_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    /// TOML file with default values for any flag below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine neighborhoods from an edge list and write a model file.
    Fit(FitArgs),
    /// Grow a surrogate network from a model file.
    Generate(GenerateArgs),
    /// Compare a surrogate against the original network.
    Eval(EvalArgs),
    /// fit, generate and eval in one run.
    Pipeline(PipelineArgs),
    /// Write a synthetic ground-truth network.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodicityArg {
    Auto,
    Daily,
    Weekly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Fixed(f64),
    Auto,
}

impl FromStr for Alpha {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Alpha::Auto);
        }
        let a: f64 = s.parse().map_err(|_| format!("expected a number or \"auto\", got {s:?}"))?;
        if (0.0..=1.0).contains(&a) {
            Ok(Alpha::Fixed(a))
        } else {
            Err(format!("alpha must lie in [0, 1], got {a}"))
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Fixed(a) => write!(f, "{a}"),
            Alpha::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    Rw,
    Sir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Day/night cosine activity.
    Daily,
    /// Office hours, weekdays five times busier than weekends.
    Weekly,
}

#[derive(Debug, Args)]
pub struct FitOpts {
    /// Snapshot width in seconds [default: 300].
    #[arg(long)]
    pub gap: Option<u64>,
    /// Memory depth [default: 2].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..16))]
    pub k: Option<u64>,
    /// Bucket granularity [default: auto].
    #[arg(long, value_enum)]
    pub periodicity: Option<PeriodicityArg>,
}

#[derive(Debug, Args)]
pub struct GenOpts {
    /// Node count [default: the model's].
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Snapshot count [default: the training length for pipeline].
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// Validation probability, or "auto" to preserve density [default: 0.5].
    #[arg(long)]
    pub alpha: Option<Alpha>,
    /// RNG seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Whitespace-separated seed layer degrees.
    #[arg(long)]
    pub seed_degrees: Option<PathBuf>,
    /// Resample the model's first-layer degrees when --nodes differs.
    #[arg(long)]
    pub resample_degrees: bool,
}

#[derive(Debug, Args)]
pub struct EvalOpts {
    /// Start policies for the dynamics [default: t0,half,peak].
    #[arg(long, value_delimiter = ',', value_parser = parse_start)]
    pub starts: Option<Vec<StartPolicy>>,
    /// Sample distances [default: ks,js,kl,emd].
    #[arg(long, value_delimiter = ',', value_parser = parse_distance)]
    pub distances: Option<Vec<DistanceKind>>,
    /// Dynamical probes [default: rw,sir].
    #[arg(long, value_delimiter = ',', value_enum)]
    pub dynamics: Option<Vec<Probe>>,
    /// SIR transmission probabilities [default: 0.25,0.13,0.01].
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// SIR recovery probability [default: 0.055].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Random walks per start [default: 1000].
    #[arg(long)]
    pub rw_runs: Option<usize>,
    /// Walks per ordered pair for MFPT [default: 5].
    #[arg(long)]
    pub mfpt_repeats: Option<usize>,
    /// SIR runs per start and lambda [default: 100].
    #[arg(long)]
    pub sir_runs: Option<usize>,
    /// Also compare the original against a re-simulation of itself.
    #[arg(long)]
    pub stability: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Edge list with `t i j` lines.
    pub input: PathBuf,
    #[command(flatten)]
    pub opts: FitOpts,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write raw neighborhood counts.
    #[arg(long)]
    pub counts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model file from `fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub opts: GenOpts,
    /// Edge list to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-layer diagnostics CSV [default: <out>.diagnostics.csv].
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub original: PathBuf,
    pub surrogate: PathBuf,
    /// Snapshot width for files without a header [default: 300].
    #[arg(long)]
    pub gap: Option<u64>,
    /// RNG seed for the dynamics [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub opts: EvalOpts,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub fit: FitOpts,
    #[command(flatten)]
    pub gen: GenOpts,
    #[command(flatten)]
    pub eval: EvalOpts,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 50)]
    pub nodes: usize,
    /// [default: two days (daily) or two weeks (weekly)]
    #[arg(long)]
    pub snapshots: Option<usize>,
    #[arg(long, default_value_t = 300)]
    pub gap: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_start(s: &str) -> Result<StartPolicy, String> {
    s.parse()
}

fn parse_distance(s: &str) -> Result<DistanceKind, String> {
    s.parse()
}
