//! TOML run file for `ccrm all`.
//!
//! ```toml
//! snapshot = "snap"            # written by [ingest] when present, read by the other stages
//! output_dir = "out"
//! seed = 0
//! jobs = 4
//! source = "views"             # or "outlinks"
//! months = "2013-05:2014-06"   # optional view-count window
//! format = "tsv"               # or "json"
//! permutations = 10000
//!
//! [thresholds]
//! min_cuisines = 3
//! min_neighbors = 3
//!
//! [ingest]                     # optional
//! seeds = "seeds.tsv"
//! months = "2013-05:2014-06"
//! replay = "http"              # or record = "dir", or neither for live fetching
//!
//! [sim]                        # optional; enabled = false skips the stage
//! replications = 20
//! sigma_grid = [0, 5, 10, 20, 30, 40, 60]
//! histogram = { lower = -1.0, upper = 1.0, bins = 40, smoothing_epsilon = 1e-6 }
//!
//! [validate]                   # optional
//! externals = ["ess.tsv"]
//! crowd_tasks = 15
//! ```
//!
//! Relative paths are resolved against the run file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use ccrm_core::corpus::MonthRange;
use ccrm_core::measures::Thresholds;
use ccrm_core::sim::{DEFAULT_LAMBDA_GRID, DEFAULT_SIGMA_GRID};
use ccrm_core::stats::HistogramSpec;
use serde::Deserialize;

use crate::args::{
    AllArgs, AnalyzeArgs, IngestArgs, OutputFormat, SimulateArgs, Source, ValidateArgs,
};
use crate::error::{ctx, CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub snapshot: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub source: Source,
    pub months: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub ingest: Option<IngestSection>,
    #[serde(default)]
    pub sim: SimSection,
    pub validate: Option<ValidateSection>,
}

fn default_permutations() -> usize {
    10_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    pub seeds: PathBuf,
    pub months: String,
    pub replay: Option<PathBuf>,
    pub record: Option<PathBuf>,
    #[serde(rename = "static")]
    pub static_dir: Option<PathBuf>,
    #[serde(default = "default_concurrency")]
    pub max_concurrent: usize,
    pub min_interval_ms: Option<u64>,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "default_threshold")]
    pub failure_threshold: f64,
}

fn default_concurrency() -> usize {
    4
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}
fn default_timeout() -> u64 {
    30_000
}
fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub enabled: bool,
    pub synthetic: bool,
    pub sigma_star: f64,
    pub synthetic_draws: usize,
    pub communities: usize,
    pub replications: usize,
    pub mu: f64,
    pub target: f64,
    pub lambda_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub histogram: HistogramSpec,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            enabled: true,
            synthetic: false,
            sigma_star: 30.0,
            synthetic_draws: 20,
            communities: 27,
            replications: 20,
            mu: 10.0,
            target: 0.242,
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            sigma_grid: DEFAULT_SIGMA_GRID.to_vec(),
            histogram: HistogramSpec::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default)]
    pub externals: Vec<PathBuf>,
    pub crowd_tasks: Option<usize>,
    pub crowd_ranking: Option<PathBuf>,
    #[serde(default)]
    pub bias_source: Source,
}

fn months(s: &str) -> CliResult<MonthRange> {
    s.parse().map_err(ctx(format!("month range {s:?}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(ctx(path.display()))?;
        let mut config: RunConfig = toml::from_str(&text).map_err(ctx(path.display()))?;
        if config.thresholds.min_cuisines == 0 || config.thresholds.min_neighbors == 0 {
            return Err(CliError::Input(format!(
                "{}: thresholds must be at least 1",
                path.display()
            )));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut config.snapshot);
        fix(&mut config.output_dir);
        if let Some(i) = &mut config.ingest {
            fix(&mut i.seeds);
            for p in [&mut i.replay, &mut i.record, &mut i.static_dir]
                .into_iter()
                .flatten()
            {
                fix(p);
            }
        }
        if let Some(v) = &mut config.validate {
            v.externals.iter_mut().for_each(fix);
            if let Some(p) = &mut v.crowd_ranking {
                fix(p);
            }
        }
        Ok(config)
    }

    pub fn ingest_args(&self) -> CliResult<Option<IngestArgs>> {
        let Some(i) = &self.ingest else {
            return Ok(None);
        };
        Ok(Some(IngestArgs {
            seeds: i.seeds.clone(),
            months: months(&i.months)?,
            out: self.snapshot.clone(),
            replay: i.replay.clone(),
            record: i.record.clone(),
            static_dir: i.static_dir.clone(),
            max_concurrent: i.max_concurrent,
            min_interval_ms: i.min_interval_ms,
            retries: i.retries,
            backoff_ms: i.backoff_ms,
            timeout_ms: i.timeout_ms,
            failure_threshold: i.failure_threshold,
        }))
    }

    pub fn analyze_args(&self) -> CliResult<AnalyzeArgs> {
        Ok(AnalyzeArgs {
            snapshot: self.snapshot.clone(),
            out: self.output_dir.clone(),
            source: self.source,
            months: self.months.as_deref().map(months).transpose()?,
            min_cuisines: self.thresholds.min_cuisines,
            min_neighbors: self.thresholds.min_neighbors,
            format: self.format,
            permutations: self.permutations,
        })
    }

    pub fn simulate_args(&self) -> Option<SimulateArgs> {
        let s = &self.sim;
        s.enabled.then(|| SimulateArgs {
            empirical: (!s.synthetic).then(|| self.output_dir.join("affinity/empirical_bias.tsv")),
            synthetic: s.synthetic,
            sigma_star: s.sigma_star,
            synthetic_draws: s.synthetic_draws,
            communities: s.communities,
            replications: s.replications,
            mu: s.mu,
            target: s.target,
            lambda_grid: s.lambda_grid.clone(),
            sigma_grid: s.sigma_grid.clone(),
            hist_lower: s.histogram.lower,
            hist_upper: s.histogram.upper,
            hist_bins: s.histogram.bins,
            hist_epsilon: s.histogram.smoothing_epsilon,
            out: self.output_dir.clone(),
        })
    }

    pub fn validate_args(&self) -> Option<ValidateArgs> {
        let v = self.validate.as_ref()?;
        Some(ValidateArgs {
            snapshot: self.snapshot.clone(),
            analysis: self.output_dir.clone(),
            externals: v.externals.clone(),
            crowd_tasks: v.crowd_tasks,
            crowd_ranking: v.crowd_ranking.clone(),
            bias_source: v.bias_source,
            permutations: self.permutations,
            out: self.output_dir.clone(),
        })
    }
}

pub fn run_all(a: &AllArgs, seed: Option<u64>, jobs: Option<usize>) -> CliResult<()> {
    let config = RunConfig::load(&a.config)?;
    if let (None, Some(n)) = (jobs, config.jobs) {
        if n == 0 {
            return Err(CliError::Input("jobs must be positive".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let seed = seed.unwrap_or(config.seed);
    if let Some(i) = config.ingest_args()? {
        crate::ingest::run(&i)?;
    }
    crate::analyze::run(&config.analyze_args()?, seed)?;
    if let Some(s) = config.simulate_args() {
        crate::simulate::run(&s, seed)?;
    }
    if let Some(v) = config.validate_args() {
        crate::validate::run(&v, seed)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_defaults_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "snapshot = \"snap\"\noutput_dir = \"/abs/out\"\n[sim]\nreplications = 3\n",
        )
        .unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.snapshot, dir.path().join("snap"));
        assert_eq!(c.output_dir, PathBuf::from("/abs/out"));
        assert_eq!(c.thresholds, Thresholds::default());
        let s = c.simulate_args().unwrap();
        assert_eq!((s.replications, s.communities, s.hist_bins), (3, 27, 40));
        assert!(c.validate_args().is_none());
        assert!(c.ingest_args().unwrap().is_none());
    }

    #[test]
    fn rejects_unknown_keys_and_zero_thresholds() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "snapshot = \"s\"\noutput_dir = \"o\"\nsnapshots = 1\n",
        )
        .unwrap();
        assert!(RunConfig::load(&path).is_err());
        fs::write(&path, "snapshot = \"s\"\noutput_dir = \"o\"\n[thresholds]\nmin_cuisines = 0\nmin_neighbors = 1\n")
            .unwrap();
        assert!(RunConfig::load(&path).is_err());
    }
}
