//! Generative simulation of cross-community attention.
//!
//! Every community owns one practice. Community `l` spreads a fixed attention
//! mass over all practices with weights `pop(o) * a(l, o)` for `o != l`, where
//! popularities are exponential draws and affinities are either constant
//! ([`Model::PopularityOnly`]) or truncated normal draws
//! ([`Model::PopularityPlusAffinity`]). The own-practice weight
//! `k * pop(l)` uses one multiplier `k`, found by bisection so that the mean
//! self-focus bias of the generated matrix hits the configured target.
//!
//! Affinities are divided by their mean `mu` before use. Row normalization
//! cancels that factor, and it makes a zero-variance affinity model reproduce
//! the popularity-only model bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AttentionMatrix, AttentionSource, OwnershipMap};
use crate::measures::{self_focus, BiasMatrix};
use crate::stats::{derive_seed, histogram, js_divergence, HistogramSpec, StatsError};

/// Lower truncation point of affinity draws.
pub const AFFINITY_FLOOR: f64 = 1e-3;
/// Accepted distance between achieved and target self-focus.
pub const CALIBRATION_TOLERANCE: f64 = 0.005;
const MAX_CALIBRATION_ITERATIONS: usize = 100;
const SYNTHETIC_STREAM: u64 = 0x005E_ED0F_E3B1;

pub const DEFAULT_LAMBDA_GRID: [f64; 7] = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
pub const DEFAULT_SIGMA_GRID: [f64; 7] = [0.0, 5.0, 10.0, 20.0, 30.0, 40.0, 60.0];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(
        "self-focus calibration failed: target {target} outside reachable range [{low}, {high}]"
    )]
    CalibrationFailed { target: f64, low: f64, high: f64 },
    #[error("empty sweep grid")]
    EmptyGrid,
    #[error("empirical bias sample is empty")]
    EmptyEmpirical,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    PopularityOnly,
    PopularityPlusAffinity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_communities: usize,
    /// Rate of the exponential popularity distribution.
    pub lambda: f64,
    pub affinity_mu: f64,
    pub affinity_sigma: f64,
    pub self_focus_target: f64,
    pub attention_mass_per_community: f64,
    pub seed: u64,
    pub replications: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_communities: 27,
            lambda: 1.0,
            affinity_mu: 10.0,
            affinity_sigma: 0.0,
            self_focus_target: 0.242,
            attention_mass_per_community: 1.0,
            seed: 0,
            replications: 20,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_owned()));
        if self.n_communities < 3 {
            return bad("n_communities must be at least 3");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        if !(self.affinity_mu > AFFINITY_FLOOR && self.affinity_mu.is_finite()) {
            return bad("affinity_mu must exceed the affinity floor");
        }
        if !(self.affinity_sigma >= 0.0 && self.affinity_sigma.is_finite()) {
            return bad("affinity_sigma must be nonnegative");
        }
        if !self.self_focus_target.is_finite() {
            return bad("self_focus_target must be finite");
        }
        if !(self.attention_mass_per_community > 0.0
            && self.attention_mass_per_community.is_finite())
        {
            return bad("attention_mass_per_community must be positive");
        }
        if self.replications == 0 {
            return bad("replications must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub attention: AttentionMatrix,
    /// `bias(l, o)` for every `l != o`, row-major.
    pub bias_values: Vec<f64>,
    pub achieved_self_focus: f64,
    /// Calibrated own-practice weight multiplier.
    pub self_weight: f64,
}

/// `n` i.i.d. Exp(`lambda`) draws.
pub fn draw_popularities<R: Rng + ?Sized>(n: usize, lambda: f64, rng: &mut R) -> Vec<f64> {
    let exp = Exp::new(lambda).expect("lambda must be positive");
    (0..n).map(|_| exp.sample(rng)).collect()
}

fn community_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i:03}")).collect()
}

struct World {
    labels: Vec<String>,
    ownership: OwnershipMap,
    popularity: Vec<f64>,
    /// `affinity[l][o]`, unused on the diagonal.
    affinity: Vec<Vec<f64>>,
    mass: f64,
}

impl World {
    fn attention(&self, self_weight: f64) -> AttentionMatrix {
        let n = self.popularity.len();
        let rows = (0..n)
            .map(|l| {
                let w: Vec<f64> = (0..n)
                    .map(|o| {
                        if o == l {
                            self_weight * self.popularity[l]
                        } else {
                            self.popularity[o] * self.affinity[l][o]
                        }
                    })
                    .collect();
                let total: f64 = w.iter().sum();
                w.into_iter().map(|x| self.mass * x / total).collect()
            })
            .collect();
        AttentionMatrix::from_rows(
            AttentionSource::Simulated,
            self.labels.clone(),
            self.labels.clone(),
            rows,
            None,
        )
        .expect("simulated attention is well formed")
    }

    fn mean_self_focus(&self, bias: &BiasMatrix) -> f64 {
        let values: Vec<f64> = self
            .labels
            .iter()
            .filter_map(|l| self_focus(bias, &self.ownership, l, 1))
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    }

    fn evaluate(&self, log_k: f64) -> (AttentionMatrix, BiasMatrix, f64) {
        let attention = self.attention(log_k.exp());
        let bias = BiasMatrix::compute(&attention);
        let sfb = self.mean_self_focus(&bias);
        (attention, bias, sfb)
    }
}

/// Generates one synthetic attention matrix and its off-diagonal bias values.
pub fn generate_attention<R: Rng + ?Sized>(
    config: &SimConfig,
    model: Model,
    rng: &mut R,
) -> Result<SimResult, SimError> {
    config.validate()?;
    let n = config.n_communities;
    let popularity = draw_popularities(n, config.lambda, rng);
    let affinity = match model {
        Model::PopularityOnly => vec![vec![1.0; n]; n],
        Model::PopularityPlusAffinity => {
            let normal = Normal::new(config.affinity_mu, config.affinity_sigma)
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
            (0..n)
                .map(|l| {
                    (0..n)
                        .map(|o| {
                            if o == l {
                                1.0
                            } else {
                                normal.sample(rng).max(AFFINITY_FLOOR) / config.affinity_mu
                            }
                        })
                        .collect()
                })
                .collect()
        }
    };
    let labels = community_labels(n);
    let mut ownership = OwnershipMap::new();
    for l in &labels {
        ownership.insert(l.clone(), l.clone());
    }
    let world = World {
        labels,
        ownership,
        popularity,
        affinity,
        mass: config.attention_mass_per_community,
    };

    // Mean self-focus increases monotonically with the self-weight multiplier.
    let target = config.self_focus_target;
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    let low = world.evaluate(lo).2;
    let high = world.evaluate(hi).2;
    if !(low <= target && target <= high) {
        return Err(SimError::CalibrationFailed { target, low, high });
    }
    let mut best = world.evaluate(0.5 * (lo + hi));
    let mut best_log_k = 0.5 * (lo + hi);
    for _ in 0..MAX_CALIBRATION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let eval = world.evaluate(mid);
        let diff = eval.2 - target;
        if diff.abs() < (best.2 - target).abs() {
            best_log_k = mid;
            best = eval;
        }
        if diff.abs() < 1e-10 {
            break;
        }
        if diff < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (attention, bias, achieved) = best;
    if (achieved - target).abs() > CALIBRATION_TOLERANCE {
        return Err(SimError::CalibrationFailed { target, low, high });
    }
    let bias_values = (0..n)
        .flat_map(|l| (0..n).filter(move |&o| o != l).map(move |o| (l, o)))
        .map(|(l, o)| bias.get(l, o).expect("all simulated rows are eligible"))
        .collect();
    Ok(SimResult {
        attention,
        bias_values,
        achieved_self_focus: achieved,
        self_weight: best_log_k.exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Lambda,
    Sigma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    /// `None` when every replication of the cell failed to calibrate.
    pub mean_jsd: Option<f64>,
    pub std_jsd: Option<f64>,
    pub n_ok: usize,
}

/// Seed of replication `rep`. Every grid value reuses the same replication
/// seeds, so neighbouring grid cells differ only by the swept parameter.
pub fn replication_seed(base: u64, rep: usize) -> u64 {
    derive_seed(base, rep as u64)
}

/// Scores every grid value by the mean JSD between the simulated and the
/// empirical bias distributions over `base.replications` seeds.
pub fn sweep(
    base: &SimConfig,
    model: Model,
    parameter: SweepParameter,
    grid: &[f64],
    empirical_bias: &[f64],
    hist_spec: &HistogramSpec,
) -> Result<Vec<SweepRow>, SimError> {
    if grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    if empirical_bias.is_empty() {
        return Err(SimError::EmptyEmpirical);
    }
    base.validate()?;
    let empirical = histogram(empirical_bias, hist_spec)?;
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..base.replications).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<Option<f64>, SimError>> = jobs
        .par_iter()
        .map(|&(cell, rep)| {
            let mut config = base.clone();
            match parameter {
                SweepParameter::Lambda => config.lambda = grid[cell],
                SweepParameter::Sigma => config.affinity_sigma = grid[cell],
            }
            config.validate()?;
            let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(base.seed, rep));
            match generate_attention(&config, model, &mut rng) {
                Ok(sim) => {
                    let h = histogram(&sim.bias_values, hist_spec)?;
                    Ok(Some(js_divergence(&h, &empirical)?))
                }
                Err(SimError::CalibrationFailed { .. }) => {
                    log::warn!(
                        "calibration failed for {parameter:?}={} replication {rep}",
                        grid[cell]
                    );
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut per_cell: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    for (&(cell, _), r) in jobs.iter().zip(results) {
        if let Some(v) = r? {
            per_cell[cell].push(v);
        }
    }
    let mut rows: Vec<SweepRow> = grid
        .iter()
        .zip(per_cell)
        .map(|(&param, values)| {
            let n = values.len();
            let mean = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
            let std = mean
                .map(|m| (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt());
            SweepRow {
                param,
                mean_jsd: mean,
                std_jsd: std,
                n_ok: n,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.param.total_cmp(&b.param));
    Ok(rows)
}

/// Grid row with the smallest mean JSD (first one on ties).
pub fn best_row(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| r.mean_jsd.is_some())
        .min_by(|a, b| a.mean_jsd.unwrap().total_cmp(&b.mean_jsd.unwrap()))
}

/// Pooled off-diagonal bias values from `draws` independent runs, a
/// stand-in for an empirical distribution in self-consistency experiments.
pub fn synthetic_bias_sample(
    config: &SimConfig,
    model: Model,
    draws: usize,
) -> Result<Vec<f64>, SimError> {
    let mut out = Vec::new();
    for d in 0..draws {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(config.seed ^ SYNTHETIC_STREAM, d as u64));
        out.extend(generate_attention(config, model, &mut rng)?.bias_values);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn popularity_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let v = draw_popularities(100_000, 2.0, &mut rng);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
        assert!(v.iter().all(|x| *x >= 0.0));

        let v = draw_popularities(100_000, 100.0, &mut rng);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        let expected = 1.0 / (100.0f64 * 100.0);
        assert!((var - expected).abs() / expected < 0.05, "{var}");

        let a = draw_popularities(10, 1.0, &mut ChaCha8Rng::seed_from_u64(3));
        let b = draw_popularities(10, 1.0, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    fn config(sigma: f64) -> SimConfig {
        SimConfig {
            n_communities: 12,
            affinity_sigma: sigma,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn zero_variance_affinity_matches_popularity_model() {
        let c = config(0.0);
        let m1 = generate_attention(&c, Model::PopularityOnly, &mut ChaCha8Rng::seed_from_u64(8))
            .unwrap();
        let m2 = generate_attention(
            &c,
            Model::PopularityPlusAffinity,
            &mut ChaCha8Rng::seed_from_u64(8),
        )
        .unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn calibrated_rows_and_columns() {
        let c = config(20.0);
        let r = generate_attention(
            &c,
            Model::PopularityPlusAffinity,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert!((r.achieved_self_focus - 0.242).abs() <= CALIBRATION_TOLERANCE);
        let n = c.n_communities;
        for l in 0..n {
            assert!((r.attention.row_total(l) - 1.0).abs() < 1e-9);
        }
        let bias = BiasMatrix::compute(&r.attention);
        for o in 0..n {
            let col: f64 = (0..n).map(|l| bias.get(l, o).unwrap()).sum();
            assert!(col.abs() < 1e-9);
        }
        assert_eq!(r.bias_values.len(), n * (n - 1));
        assert!(r.bias_values.iter().all(|b| (-1.0..=1.0).contains(b)));
        let again = generate_attention(
            &c,
            Model::PopularityPlusAffinity,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn unreachable_target_fails_calibration() {
        let c = SimConfig {
            self_focus_target: 5.0,
            ..config(0.0)
        };
        let r = generate_attention(&c, Model::PopularityOnly, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(r, Err(SimError::CalibrationFailed { .. })));
    }

    #[test]
    fn invalid_configs() {
        assert!(SimConfig {
            n_communities: 2,
            ..config(0.0)
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            lambda: 0.0,
            ..config(0.0)
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            affinity_sigma: -1.0,
            ..config(0.0)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn single_point_grid_and_failed_cells() {
        let base = SimConfig {
            replications: 2,
            ..config(0.0)
        };
        let emp = vec![0.0, 0.01, -0.01];
        let spec = HistogramSpec::default();
        let rows = sweep(
            &base,
            Model::PopularityOnly,
            SweepParameter::Lambda,
            &[1.0],
            &emp,
            &spec,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_ok, 2);

        let unreachable = SimConfig {
            self_focus_target: 5.0,
            ..base
        };
        let rows = sweep(
            &unreachable,
            Model::PopularityOnly,
            SweepParameter::Lambda,
            &[2.0, 1.0],
            &emp,
            &spec,
        )
        .unwrap();
        assert_eq!(
            rows.iter().map(|r| r.param).collect::<Vec<_>>(),
            vec![1.0, 2.0]
        );
        assert!(rows.iter().all(|r| r.mean_jsd.is_none() && r.n_ok == 0));
        assert!(best_row(&rows).is_none());
    }

    #[test]
    fn sweep_is_independent_of_thread_count() {
        let base = SimConfig {
            replications: 4,
            affinity_sigma: 30.0,
            ..config(0.0)
        };
        let emp = synthetic_bias_sample(&base, Model::PopularityPlusAffinity, 2).unwrap();
        let spec = HistogramSpec::new(-0.1, 0.1, 6, 1e-6).unwrap();
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                sweep(
                    &base,
                    Model::PopularityPlusAffinity,
                    SweepParameter::Sigma,
                    &[0.0, 10.0, 30.0],
                    &emp,
                    &spec,
                )
                .unwrap()
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn popularity_rate_only_rescales() {
        let a = generate_attention(
            &config(0.0),
            Model::PopularityOnly,
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        let c = SimConfig {
            lambda: 7.0,
            ..config(0.0)
        };
        let b = generate_attention(&c, Model::PopularityOnly, &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        for (x, y) in a.bias_values.iter().zip(&b.bias_values) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
