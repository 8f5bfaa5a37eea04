use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qbd", version, about = "Stationary, passage-time and transient analysis of level-dependent QBDs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary distribution π.
    Stationary(ModelArgs),
    /// Taboo first-passage transform or mean occupancy.
    Passage {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        query: PassageArgs,
    },
    /// Transient distribution f(t) by numerical Laplace inversion.
    Transient {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        query: TransientArgs,
        #[command(flatten)]
        inversion: InversionArgs,
    },
    /// Parameter sensitivities of a stationary, passage or transient quantity.
    Sensitivity {
        #[command(flatten)]
        model: ModelArgs,
        /// Quantity to differentiate.
        #[arg(long, value_enum, default_value_t = Quantity::Stationary)]
        of: Quantity,
        /// Parameter name, or `all`.
        #[arg(long, default_value = "all")]
        param: String,
        #[command(flatten)]
        passage: PassageArgs,
        #[command(flatten)]
        transient: TransientArgs,
        #[command(flatten)]
        inversion: InversionArgs,
    },
    /// Smallest truncation level whose probe levels have settled.
    Truncate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value_t = 200)]
        lmax: usize,
    },
    /// Cross-check every solver against the dense reference implementations.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        inversion: InversionArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Stationary,
    Passage,
    Transient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PassageArgs {
    #[arg(long)]
    pub from: Option<usize>,
    #[arg(long)]
    pub to: Option<usize>,
    /// Levels on which time is counted: `a:b` (inclusive) or `all`.
    #[arg(long, default_value = "all")]
    pub taboo: TabooSpec,
    /// 0 for the transform at each `--s`, 1 for the mean taboo occupancy.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub moment: u8,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub s: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct TransientArgs {
    /// Initial level.
    #[arg(long, default_value_t = 0)]
    pub n0: usize,
    /// Initial phase distribution on level `n0`; a point mass on phase 0 when omitted.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct InversionArgs {
    #[arg(long = "inv-A", default_value_t = 18.4)]
    pub a: f64,
    #[arg(long = "inv-terms", default_value_t = 15)]
    pub terms: usize,
    #[arg(long = "inv-euler", default_value_t = 11)]
    pub euler: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TabooSpec {
    All,
    Range(usize, usize),
}

impl FromStr for TabooSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(TabooSpec::All);
        }
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected `a:b` or `all`, got `{s}`"))?;
        let a: usize = a.trim().parse().map_err(|e| format!("bad lower level `{a}`: {e}"))?;
        let b: usize = b.trim().parse().map_err(|e| format!("bad upper level `{b}`: {e}"))?;
        if a > b {
            return Err(format!("empty range {a}:{b}"));
        }
        Ok(TabooSpec::Range(a, b))
    }
}
