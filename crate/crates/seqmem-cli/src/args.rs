use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use seqmem::rules::{InteractionFunction, RuleConfig, TemporalKernel, DEFAULT_GPI_TOL, DEFAULT_LAMBDA};
use seqmem::theory::CapacityKind;

pub const OUT_DIR_ENV: &str = "SEQMEM_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "seqmem", version = env!("CARGO_PKG_VERSION"), about = "Sequence associative memory experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Global seed; every output is a pure function of it and the config.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (the environment variable takes precedence over the default).
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "results")]
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `key = value` file; flags on the command line override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Transition and/or sequence capacity search.
    Capacity(CapacityArgs),
    /// Monte Carlo crosstalk moments and histogram.
    Crosstalk(CrosstalkArgs),
    /// Run one sequence and segment it into dwell periods.
    Trace(TraceArgs),
    /// Capacity against pattern bias for several rules.
    BiasSweep(BiasSweepArgs),
    /// Recall of the MNIST digit sequence.
    Mnist(MnistArgs),
    /// Evaluate a closed-form prediction.
    Theory(TheoryArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    Seqnet,
    Densenet,
    Hopfield,
    Mhn,
    Mixednet,
    Gpi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Transition,
    Sequence,
    Both,
}

impl KindArg {
    pub fn kinds(self) -> Vec<CapacityKind> {
        match self {
            KindArg::Transition => vec![CapacityKind::Transition],
            KindArg::Sequence => vec![CapacityKind::Sequence],
            KindArg::Both => vec![CapacityKind::Transition, CapacityKind::Sequence],
        }
    }
}

fn parse_f(s: &str) -> Result<InteractionFunction, String> {
    s.parse().map_err(|e: seqmem::Error| e.to_string())
}

fn f_string(f: &InteractionFunction) -> String {
    f.to_string()
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RuleArgs {
    #[arg(long, value_enum, default_value = "densenet")]
    pub rule: RuleKind,
    /// Interaction function: identity, poly:D or exp.
    #[arg(long, default_value = "poly:2", value_parser = parse_f)]
    #[serde(serialize_with = "ser_f")]
    pub f: InteractionFunction,
    /// MixedNet symmetric function (defaults to --f).
    #[arg(long, value_parser = parse_f)]
    #[serde(serialize_with = "ser_opt_f")]
    pub f_s: Option<InteractionFunction>,
    /// MixedNet asymmetric function (defaults to --f).
    #[arg(long, value_parser = parse_f)]
    #[serde(serialize_with = "ser_opt_f")]
    pub f_a: Option<InteractionFunction>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub tau: usize,
    /// Temporal kernel: uniform or exp:RATE.
    #[arg(long, default_value = "uniform")]
    pub kernel: String,
    #[arg(long, default_value_t = DEFAULT_GPI_TOL)]
    pub gpi_tol: f64,
}

fn ser_f<S: serde::Serializer>(f: &InteractionFunction, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&f_string(f))
}

fn ser_opt_f<S: serde::Serializer>(f: &Option<InteractionFunction>, s: S) -> Result<S::Ok, S::Error> {
    match f {
        Some(f) => s.serialize_some(&f_string(f)),
        None => s.serialize_none(),
    }
}

pub fn parse_kernel(s: &str) -> Result<TemporalKernel, String> {
    match s.trim() {
        "uniform" => Ok(TemporalKernel::UniformStep),
        other => match other.strip_prefix("exp:").map(str::parse::<f64>) {
            Some(Ok(rate)) => Ok(TemporalKernel::ExponentialDecay { rate }),
            _ => Err(format!("unknown kernel '{other}' (uniform, exp:RATE)")),
        },
    }
}

impl RuleArgs {
    pub fn to_rule(&self) -> Result<RuleConfig, String> {
        let f = self.f;
        let rule = match self.rule {
            RuleKind::Seqnet => RuleConfig::SeqNet,
            RuleKind::Densenet => RuleConfig::DenseNet { f },
            RuleKind::Hopfield => RuleConfig::Hopfield,
            RuleKind::Mhn => RuleConfig::Mhn { f },
            RuleKind::Gpi => RuleConfig::GpiDenseNet { f, tol: self.gpi_tol },
            RuleKind::Mixednet => RuleConfig::MixedNet {
                f_s: self.f_s.unwrap_or(f),
                f_a: self.f_a.unwrap_or(f),
                lambda: self.lambda,
                tau: self.tau,
                kernel: parse_kernel(&self.kernel)?,
            },
        };
        rule.validate().map_err(|e| e.to_string())?;
        Ok(rule)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ProtocolArgs {
    #[arg(long, default_value_t = 100)]
    pub n_sequences: usize,
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.99)]
    pub decay: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p0_multiplier: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_rounds: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CapacityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "transition")]
    pub kind: KindArg,
    /// Pattern bias; 0 draws Rademacher patterns.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CrosstalkArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 200)]
    pub bins: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TraceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// Defaults to P * tau + tau.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2)]
    pub max_gap: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BiasSweepArgs {
    /// Comma-separated rule specs such as densenet:poly:2 or gpi:poly:2.
    #[arg(long, value_delimiter = ',', default_value = "densenet:poly:1,densenet:poly:2,densenet:poly:3,gpi:poly:2")]
    pub rules: Vec<String>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6")]
    pub epsilons: Vec<f64>,
    #[arg(long, value_enum, default_value = "transition")]
    pub kind: KindArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MnistArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    #[arg(long, default_value = "data/train-images-idx3-ubyte")]
    pub images: PathBuf,
    #[arg(long, default_value = "data/train-labels-idx1-ubyte")]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub threshold: u8,
    #[arg(long, default_value_t = 1000)]
    pub blocks: usize,
    /// One-based times whose states are dumped as images.
    #[arg(long, value_delimiter = ',', default_value = "1,102,203,304")]
    pub dump_times: Vec<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TheoryArgs {
    #[arg(long)]
    pub formula: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long)]
    pub d_s: Option<u32>,
    #[arg(long)]
    pub d_a: Option<u32>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, value_parser = parse_f)]
    #[serde(serialize_with = "ser_opt_f")]
    pub f: Option<InteractionFunction>,
    #[arg(long)]
    pub kind: Option<String>,
}

/// `seqnet`, `hopfield`, `densenet:F`, `mhn:F`, `gpi:F`.
pub fn parse_rule_spec(spec: &str) -> Result<RuleConfig, String> {
    let spec = spec.trim();
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let f = || parse_f(rest);
    let rule = match head {
        "seqnet" => RuleConfig::SeqNet,
        "hopfield" => RuleConfig::Hopfield,
        "densenet" => RuleConfig::DenseNet { f: f()? },
        "mhn" => RuleConfig::Mhn { f: f()? },
        "gpi" => RuleConfig::GpiDenseNet { f: f()?, tol: DEFAULT_GPI_TOL },
        other => return Err(format!("unknown rule spec '{other}'")),
    };
    rule.validate().map_err(|e| e.to_string())?;
    Ok(rule)
}
