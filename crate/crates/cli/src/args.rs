use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finnet_core::knockout::{DEFAULT_ALPHA, DEFAULT_SAMPLES, DEFAULT_TRIALS};
use finnet_core::lgd::COARSE_GRID;
use finnet_core::netbuild::DEFAULT_GDP_THRESHOLD;
use finnet_core::nullmodels::{DEFAULT_SIGMA_CORRECTION, DEFAULT_SWAP_FACTOR};
use finnet_core::seed::DEFAULT_SEED;
use finnet_core::{DegreePairing, NullModelKind, Strategy};

pub const DATA_DIR_ENV: &str = "FINNET_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "finnet",
    version,
    about = "Cross-border portfolio networks: construction, null models, knockouts and default cascades"
)]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Output file (default: stdout).
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Threshold one year's holdings into a binary network.
    Build(BuildArgs),
    /// Fit the two-way log-normal holdings model.
    FitLognormal(FitArgs),
    /// Sample networks from a null model.
    GenNull(GenNullArgs),
    /// Node-removal curves for empirical or null networks.
    Knockout(KnockoutArgs),
    /// Compare empirical measures with null-model intervals across years.
    CiTable(CiTableArgs),
    /// A single cascade trace, or impact statistics for one threshold pair.
    Lgd(LgdArgs),
    /// Impact statistics over a threshold grid.
    LgdSweep(SweepArgs),
    /// Fine threshold grid for small subsets of a country group.
    PigsGrid(PigsArgs),
    /// Write a network with weight classes as an edge list or DOT graph.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Directory holding assets.csv and gdp.csv.
    #[arg(long, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
    /// Bilateral holdings table (overrides the data directory).
    #[arg(long)]
    pub assets: Option<PathBuf>,
    /// GDP table (overrides the data directory).
    #[arg(long)]
    pub gdp: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleTag {
    #[value(name = "A")]
    A,
    #[value(name = "B")]
    B,
}

#[derive(Debug, Clone, Args)]
pub struct RuleArgs {
    #[arg(long, value_enum, default_value = "A", ignore_case = true)]
    pub rule: RuleTag,
    /// GDP fraction for rule B.
    #[arg(long, default_value_t = DEFAULT_GDP_THRESHOLD)]
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Divisor {
    /// N − (2n − 1)
    ResidualDof,
    /// N
    Observations,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, alias = "years")]
    pub year: i32,
    #[command(flatten)]
    pub rule: RuleArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// A year, a range such as 2001-2009, or a comma list.
    #[arg(long, alias = "year", value_parser = parse_years)]
    pub years: Years,
    /// Fit all years jointly over the union of their countries.
    #[arg(long)]
    pub pooled: bool,
    #[arg(long, default_value_t = DEFAULT_SIGMA_CORRECTION)]
    pub correction: f64,
    #[arg(long, value_enum, default_value = "residual-dof")]
    pub divisor: Divisor,
    /// Also estimate the censoring correction by refitting this many
    /// synthetic reported matrices drawn from each fit.
    #[arg(long)]
    pub calibrate: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenNullArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, alias = "years")]
    pub year: i32,
    #[command(flatten)]
    pub rule: RuleArgs,
    #[arg(long, value_parser = clap::value_parser!(NullModelKind))]
    pub model: NullModelKind,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = DEFAULT_SWAP_FACTOR)]
    pub swap_factor: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Debug, Args)]
pub struct KnockoutArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, alias = "year", value_parser = parse_years)]
    pub years: Years,
    #[command(flatten)]
    pub rule: RuleArgs,
    #[arg(long, value_parser = clap::value_parser!(Strategy))]
    pub strategy: Strategy,
    /// Run the knockouts on networks drawn from this null model instead of
    /// the empirical ones.
    #[arg(long, value_parser = clap::value_parser!(NullModelKind))]
    pub model: Option<NullModelKind>,
    /// Traces per network.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Null networks per year for `--ci-out`.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value = "out-in", value_parser = clap::value_parser!(DegreePairing))]
    pub pairing: DegreePairing,
    /// Also write per-year interval comparisons against `--model` here.
    #[arg(long, requires = "model")]
    pub ci_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Debug, Args)]
pub struct CiTableArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, alias = "year", value_parser = parse_years)]
    pub years: Years,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "A,B", ignore_case = true)]
    pub rules: Vec<RuleTag>,
    #[arg(long, default_value_t = DEFAULT_GDP_THRESHOLD)]
    pub t: f64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "er,out-degree,in-degree,rewiring,log-normal",
        value_parser = clap::value_parser!(NullModelKind)
    )]
    pub models: Vec<NullModelKind>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value = "out-in", value_parser = clap::value_parser!(DegreePairing))]
    pub pairing: DegreePairing,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    /// Fraction of an exposure lost when the counterparty defaults.
    #[arg(long, default_value_t = 1.0)]
    pub haircut: f64,
}

#[derive(Debug, Args)]
pub struct LgdArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, alias = "years")]
    pub year: i32,
    /// Comma-separated initial defaulters; prints the cascade trace.
    #[arg(long, value_delimiter = ',')]
    pub initial: Vec<String>,
    /// Default threshold as a fraction of the holder's portfolio.
    #[arg(long, default_value_t = 0.1)]
    pub d1: f64,
    /// Default threshold as a fraction of the holder's GDP.
    #[arg(long, default_value_t = 0.1)]
    pub d2: f64,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    /// Largest initial set size when no `--initial` is given.
    #[arg(long, default_value_t = 3)]
    pub k_max: usize,
    /// Emit the fine threshold grid for `--group` instead.
    #[arg(long, conflicts_with = "initial")]
    pub pigs_grid: bool,
    #[arg(long, value_delimiter = ',', default_value = "PT,IE,GR,ES")]
    pub group: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, alias = "year", value_parser = parse_years)]
    pub years: Years,
    #[arg(long, value_delimiter = ',', default_values_t = COARSE_GRID)]
    pub d1: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = COARSE_GRID)]
    pub d2: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub k_max: usize,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    /// Also write the most frequent worst-case initial sets here.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Debug, Args)]
pub struct PigsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, alias = "years")]
    pub year: i32,
    #[arg(long, value_delimiter = ',', default_value = "PT,IE,GR,ES")]
    pub group: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    EdgeList,
    Dot,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, alias = "years")]
    pub year: i32,
    #[command(flatten)]
    pub rule: RuleArgs,
    #[arg(long, value_enum, default_value = "edge-list")]
    pub format: GraphFormat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Years(pub Vec<i32>);

impl std::fmt::Display for Years {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// `2007`, `2001-2009` or `2001,2004,2007`.
pub fn parse_years(s: &str) -> Result<Years, String> {
    let year = |t: &str| t.trim().parse::<i32>().map_err(|_| format!("not a year: {t:?}"));
    let mut out = Vec::new();
    for part in s.split(',') {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (year(a)?, year(b)?);
                if a > b {
                    return Err(format!("empty year range {part}"));
                }
                out.extend(a..=b);
            }
            None => out.push(year(part)?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(Years(out))
}
