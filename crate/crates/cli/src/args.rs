use std::path::PathBuf;

use ccrm_core::corpus::{AttentionSource, MonthRange};
use ccrm_core::report::Format;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "ccrm",
    version,
    about = "Mine cross-cultural relations from multilingual wiki data"
)]
pub struct Cli {
    /// Worker threads for parallel stages [default: number of cores]
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Base seed for every randomized step [default: 0, or the config file value]
    #[arg(long, global = true, value_name = "SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch seed articles (live or from recorded responses) into a snapshot directory
    Ingest(IngestArgs),
    /// Compute all measures for a snapshot and write the output tree
    Analyze(AnalyzeArgs),
    /// Fit the popularity and popularity+affinity models to a bias distribution
    Simulate(SimulateArgs),
    /// Correlate measures with external rankings and build crowd tasks
    Validate(ValidateArgs),
    /// Run the whole pipeline from a TOML run file
    All(AllArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Views,
    Outlinks,
}

impl From<Source> for AttentionSource {
    fn from(s: Source) -> Self {
        match s {
            Source::Views => AttentionSource::Views,
            Source::Outlinks => AttentionSource::Outlinks,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Tsv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Tsv => Format::Tsv,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// Seed TSV: language, cuisine_id, article_title, article_url
    #[arg(long, value_name = "FILE")]
    pub seeds: PathBuf,
    /// Inclusive month range for view counts, e.g. 2013-05:2014-06
    #[arg(long, value_name = "RANGE")]
    pub months: MonthRange,
    /// Snapshot directory to write
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Serve requests from recorded responses in DIR instead of the network
    #[arg(long, value_name = "DIR", conflicts_with = "record")]
    pub replay: Option<PathBuf>,
    /// Fetch live and record every response into DIR
    #[arg(long, value_name = "DIR")]
    pub record: Option<PathBuf>,
    /// Directory with languages.tsv, cuisines.tsv, ownership.tsv and adjacency.tsv
    /// replacing the built-in tables
    #[arg(long = "static", value_name = "DIR")]
    pub static_dir: Option<PathBuf>,
    /// Concurrent requests, at most 16
    #[arg(long, default_value_t = 4, value_name = "N")]
    pub max_concurrent: usize,
    /// Minimum milliseconds between requests to one host [default: 100 live, 0 replay]
    #[arg(long, value_name = "MS")]
    pub min_interval_ms: Option<u64>,
    /// Retries per request after the first attempt
    #[arg(long, default_value_t = 3, value_name = "N")]
    pub retries: u32,
    /// Base of the exponential retry backoff
    #[arg(long, default_value_t = 500, value_name = "MS")]
    pub backoff_ms: u64,
    /// Per-request timeout
    #[arg(long, default_value_t = 30_000, value_name = "MS")]
    pub timeout_ms: u64,
    /// Fail when more than this share of seeds fails
    #[arg(long, default_value_t = 0.5, value_name = "SHARE")]
    pub failure_threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Snapshot directory
    #[arg(long, value_name = "DIR")]
    pub snapshot: PathBuf,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Attention source for the empirical bias distribution and summary
    #[arg(long, value_enum, default_value_t = Source::Views)]
    pub source: Source,
    /// Restrict view counts to an inclusive month range
    #[arg(long, value_name = "RANGE")]
    pub months: Option<MonthRange>,
    /// Covered cuisines a language needs for a self-focus value
    #[arg(long, default_value_t = 3, value_name = "N")]
    pub min_cuisines: usize,
    /// Neighbour cuisines needed for regional bias and neighbour ratios
    #[arg(long, default_value_t = 3, value_name = "N")]
    pub min_neighbors: usize,
    /// Matrix file format
    #[arg(long, value_enum, default_value_t = OutputFormat::Tsv)]
    pub format: OutputFormat,
    /// Permutations for correlation p-values
    #[arg(long, default_value_t = 10_000, value_name = "N")]
    pub permutations: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Empirical bias values (affinity/empirical_bias.tsv from analyze)
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "synthetic",
        conflicts_with = "synthetic"
    )]
    pub empirical: Option<PathBuf>,
    /// Use bias values generated by the affinity model as the empirical sample
    #[arg(long)]
    pub synthetic: bool,
    /// Affinity spread of the synthetic sample
    #[arg(long, default_value_t = 30.0, value_name = "SIGMA")]
    pub sigma_star: f64,
    /// Independent draws pooled into the synthetic sample
    #[arg(long, default_value_t = 20, value_name = "N")]
    pub synthetic_draws: usize,
    /// Number of simulated communities
    #[arg(long, default_value_t = 27, value_name = "N")]
    pub communities: usize,
    /// Replications per grid value
    #[arg(long, default_value_t = 20, value_name = "N")]
    pub replications: usize,
    /// Mean of the affinity distribution
    #[arg(long, default_value_t = 10.0)]
    pub mu: f64,
    /// Mean self-focus every simulated world is calibrated to
    #[arg(long, default_value_t = 0.242)]
    pub target: f64,
    /// Popularity rates to sweep (popularity-only model)
    #[arg(long, value_delimiter = ',', value_name = "LIST", default_values_t = ccrm_core::sim::DEFAULT_LAMBDA_GRID)]
    pub lambda_grid: Vec<f64>,
    /// Affinity spreads to sweep (popularity+affinity model)
    #[arg(long, value_delimiter = ',', value_name = "LIST", default_values_t = ccrm_core::sim::DEFAULT_SIGMA_GRID)]
    pub sigma_grid: Vec<f64>,
    /// Histogram lower edge
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub hist_lower: f64,
    /// Histogram upper edge
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub hist_upper: f64,
    /// Histogram bin count
    #[arg(long, default_value_t = 40)]
    pub hist_bins: usize,
    /// Mass added to every bin before normalizing
    #[arg(long, default_value_t = 1e-6)]
    pub hist_epsilon: f64,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Snapshot directory
    #[arg(long, value_name = "DIR")]
    pub snapshot: PathBuf,
    /// Output directory of a previous analyze run
    #[arg(long, value_name = "DIR")]
    pub analysis: PathBuf,
    /// External ranking TSV (key, score); a same-named .json sidecar may set label and direction
    #[arg(long = "external", value_name = "FILE")]
    pub externals: Vec<PathBuf>,
    /// Build crowd tasks from the top and bottom K pairs
    #[arg(long, value_name = "K")]
    pub crowd_tasks: Option<usize>,
    /// Ranking used for crowd tasks [default: global cuisine similarity]
    #[arg(long, value_name = "FILE", requires = "crowd_tasks")]
    pub crowd_ranking: Option<PathBuf>,
    /// Attention source of the bias matrix used in the cross-measure comparison
    #[arg(long, value_enum, default_value_t = Source::Views)]
    pub bias_source: Source,
    /// Permutations for correlation p-values
    #[arg(long, default_value_t = 10_000, value_name = "N")]
    pub permutations: usize,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AllArgs {
    /// TOML run file
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
}
