use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dixiecup::{SequenceFamily, TailHint};

#[derive(Debug, Parser)]
#[command(name = "dixiecup", version, about = "Moments, expansions and limit laws of the m-set coupon collector")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quadrature moments next to the matching asymptotic expansion.
    Analyze(Common),
    /// Normalization, limit CDF and Lambda_N on a grid; optional Monte-Carlo KS.
    Limits(LimitsArgs),
    /// Exact Markov-chain moments of a small model against quadrature.
    Oracle(Common),
    /// Monte-Carlo sample of T_m(N).
    Simulate(SimulateArgs),
    /// Case I / Case II label of a sequence.
    Classify(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Constant,
    Power,
    Zipf,
    ExpGrowth,
    ExpDecay,
    Logpower,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tail {
    Grows,
    DecaysSubexponential,
    DecaysExponential,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Weight sequence family
    #[arg(long)]
    pub family: Option<FamilyKind>,
    /// Family parameter p
    #[arg(long)]
    pub p: Option<f64>,
    /// Explicit weights or probabilities, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub probs: Option<Vec<f64>>,
    /// Declared tail of an explicit list
    #[arg(long)]
    pub tail: Option<Tail>,
    /// Number of coupon types N
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of complete sets m
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Relative tolerance of numerical integrals
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Monte-Carlo sample count
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Monte-Carlo seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte-Carlo shards (default: available parallelism)
    #[arg(long)]
    pub shards: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LimitsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Points y for Gumbel-type laws
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y_grid: Option<Vec<f64>>,
    /// Points s for the growing-sequence law of T/A_N
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub s_grid: Option<Vec<f64>>,
    /// Also sample T_m(N) and report the KS distance to the limit law
    #[arg(long)]
    pub simulate: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Write the raw samples, one integer per line, to this file
    #[arg(long)]
    pub raw_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Analyze,
    Limits,
    Oracle,
    Simulate,
    Classify,
}

/// Fully validated run parameters; embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub command: CommandName,
    pub family: SequenceFamily,
    pub n: Option<usize>,
    pub m: u32,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub shards: usize,
    pub output: String,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_out: Option<String>,
}

fn family_from(c: &Common) -> Result<SequenceFamily, String> {
    let kind = match (c.family, &c.probs) {
        (Some(k), _) => k,
        (None, Some(_)) => FamilyKind::Explicit,
        (None, None) => return Err("either --family or --probs is required".into()),
    };
    let need_p = || c.p.ok_or_else(|| format!("--family {kind:?} needs --p").to_lowercase());
    let fam = match kind {
        FamilyKind::Constant => SequenceFamily::Constant,
        FamilyKind::Power => SequenceFamily::Power { p: need_p()? },
        FamilyKind::Zipf => SequenceFamily::Zipf { p: need_p()? },
        FamilyKind::ExpGrowth => SequenceFamily::ExpGrowth { p: need_p()? },
        FamilyKind::ExpDecay => SequenceFamily::ExpDecay { p: need_p()? },
        FamilyKind::Logpower => SequenceFamily::LogPower { p: need_p()? },
        FamilyKind::Explicit => SequenceFamily::Explicit {
            a: c.probs.clone().ok_or("--family explicit needs --probs")?,
            tail: c.tail.map(|t| match t {
                Tail::Grows => TailHint::Grows,
                Tail::DecaysSubexponential => TailHint::DecaysSubexponential,
                Tail::DecaysExponential => TailHint::DecaysExponential,
            }),
        },
    };
    if kind != FamilyKind::Explicit && c.probs.is_some() {
        return Err("--probs only applies to explicit weights".into());
    }
    fam.validate().map_err(|e| e.to_string())?;
    Ok(fam)
}

impl RunSpec {
    pub fn from_common(command: CommandName, c: &Common) -> Result<Self, String> {
        let family = family_from(c)?;
        let n = match (&family, c.n) {
            (SequenceFamily::Explicit { a, .. }, None) => Some(a.len()),
            (SequenceFamily::Explicit { a, .. }, Some(n)) if n > a.len() => {
                return Err(format!("--n {n} exceeds the {} explicit weights", a.len()))
            }
            (_, n) => n,
        };
        if n == Some(0) {
            return Err("--n must be at least 1".into());
        }
        if c.m == 0 {
            return Err("--m must be at least 1".into());
        }
        if !(c.tol.is_finite() && c.tol > 0.0) {
            return Err(format!("--tol must be positive and finite, got {}", c.tol));
        }
        if c.samples == 0 {
            return Err("--samples must be at least 1".into());
        }
        let shards = match c.shards {
            Some(0) => return Err("--shards must be at least 1".into()),
            Some(s) => s,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        Ok(Self {
            command,
            family,
            n,
            m: c.m,
            tol: c.tol,
            samples: c.samples,
            seed: c.seed,
            shards,
            output: c.out.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "stdout".into()),
            format: c.format,
            y_grid: None,
            s_grid: None,
            simulate: None,
            raw_out: None,
        })
    }

    pub fn require_n(&self) -> Result<usize, String> {
        self.n.ok_or_else(|| "--n is required for this command".to_string())
    }
}
