//! Rank correlation with a seeded permutation test, ranking alignment,
//! histograms and Jensen-Shannon divergence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("need at least 3 observations, got {0}")]
    InsufficientData(usize),
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("rank correlation undefined for a constant input")]
    ConstantInput,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("rankings share no keys")]
    EmptyIntersection,
    #[error("need at least two rankings to align")]
    TooFewRankings,
    #[error("duplicate key {0:?} in ranking")]
    DuplicateKey(String),
    #[error("distributions differ in length ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("distribution does not sum to 1 (sum = {0})")]
    NotNormalized(f64),
    #[error("negative probability {0}")]
    NegativeProbability(f64),
    #[error("invalid histogram spec: {0}")]
    InvalidSpec(&'static str),
    #[error("histogram of an empty sample without smoothing")]
    EmptySample,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Keys with scores, in descending score order; ties keep their input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPairList {
    pub source_label: String,
    pairs: Vec<(String, f64)>,
}

impl RankedPairList {
    pub fn new(
        source_label: impl Into<String>,
        mut pairs: Vec<(String, f64)>,
    ) -> Result<Self, StatsError> {
        let mut seen = BTreeSet::new();
        for (k, s) in &pairs {
            if !s.is_finite() {
                return Err(StatsError::NonFinite);
            }
            if !seen.insert(k.as_str()) {
                return Err(StatsError::DuplicateKey(k.clone()));
            }
        }
        pairs.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(RankedPairList {
            source_label: source_label.into(),
            pairs,
        })
    }

    pub fn pairs(&self) -> &[(String, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Rank of every key, 1 for the highest score, ties averaged.
    pub fn ranks(&self) -> BTreeMap<&str, f64> {
        let neg: Vec<f64> = self.pairs.iter().map(|(_, s)| -s).collect();
        self.pairs
            .iter()
            .map(|(k, _)| k.as_str())
            .zip(midranks(&neg))
            .collect()
    }

    /// Parses `key<TAB>score` rows after a `key<TAB>score` header.
    pub fn from_tsv(source_label: impl Into<String>, text: &str) -> Result<Self, StatsError> {
        let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, "key\tscore")) => {}
            _ => {
                return Err(StatsError::Parse {
                    line: 1,
                    message: "expected header \"key\\tscore\"".into(),
                })
            }
        }
        let mut pairs = Vec::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let (k, s) = line.split_once('\t').ok_or_else(|| StatsError::Parse {
                line: n,
                message: "expected two fields".into(),
            })?;
            if k.is_empty() {
                return Err(StatsError::Parse {
                    line: n,
                    message: "empty key".into(),
                });
            }
            let score: f64 = s.parse().map_err(|_| StatsError::Parse {
                line: n,
                message: format!("bad score {s:?}"),
            })?;
            pairs.push((k.to_owned(), score));
        }
        RankedPairList::new(source_label, pairs)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("key\tscore\n");
        for (k, s) in &self.pairs {
            let _ = writeln!(out, "{k}\t{s}");
        }
        out
    }
}

/// Ascending ranks starting at 1, tied values share their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn centered(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::InsufficientData(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Spearman's rho as the Pearson correlation of midranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let cx = centered(&midranks(x));
    let cy = centered(&midranks(y));
    pearson_centered(&cx, &cy)
}

fn pearson_centered(cx: &[f64], cy: &[f64]) -> Result<f64, StatsError> {
    let sxx: f64 = cx.iter().map(|v| v * v).sum();
    let syy: f64 = cy.iter().map(|v| v * v).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let sxy: f64 = cx.iter().zip(cy).map(|(a, b)| a * b).sum();
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Settings for the two-sided permutation p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub permutations: usize,
    pub seed: u64,
}

impl Default for PermutationTest {
    fn default() -> Self {
        PermutationTest {
            permutations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

/// SplitMix64 finalizer, used to derive independent per-task seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Spearman correlation with a permutation p-value. Each permutation draws
/// from its own counter-derived seed, so the result does not depend on the
/// number of worker threads.
pub fn spearman(x: &[f64], y: &[f64], test: &PermutationTest) -> Result<Correlation, StatsError> {
    check_pair(x, y)?;
    let cx = centered(&midranks(x));
    let cy = centered(&midranks(y));
    let rho = pearson_centered(&cx, &cy)?;
    let denom =
        (cx.iter().map(|v| v * v).sum::<f64>() * cy.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let threshold = rho.abs() - 1e-12;
    let extreme: usize = (0..test.permutations as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(test.seed, i));
            let mut perm = cy.clone();
            perm.shuffle(&mut rng);
            let r = cx.iter().zip(&perm).map(|(a, b)| a * b).sum::<f64>() / denom;
            usize::from(r.abs() >= threshold)
        })
        .sum();
    let p_value = (extreme + 1) as f64 / (test.permutations + 1) as f64;
    Ok(Correlation {
        rho,
        p_value,
        n: x.len(),
    })
}

/// Keys common to all rankings with their rank in each source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedRanks {
    pub labels: Vec<String>,
    pub keys: Vec<String>,
    /// `ranks[source][row]`, ranks taken within each full source list.
    pub ranks: Vec<Vec<f64>>,
    /// Number of keys each source contributed before intersection.
    pub contributed: Vec<usize>,
}

impl AlignedRanks {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

pub fn align_rankings(lists: &[&RankedPairList]) -> Result<AlignedRanks, StatsError> {
    if lists.len() < 2 {
        return Err(StatsError::TooFewRankings);
    }
    let rank_maps: Vec<BTreeMap<&str, f64>> = lists.iter().map(|l| l.ranks()).collect();
    let keys: Vec<String> = rank_maps[0]
        .keys()
        .filter(|k| rank_maps[1..].iter().all(|m| m.contains_key(*k)))
        .map(|k| k.to_string())
        .collect();
    if keys.is_empty() {
        return Err(StatsError::EmptyIntersection);
    }
    let ranks = rank_maps
        .iter()
        .map(|m| keys.iter().map(|k| m[k.as_str()]).collect())
        .collect();
    Ok(AlignedRanks {
        labels: lists.iter().map(|l| l.source_label.clone()).collect(),
        keys,
        ranks,
        contributed: lists.iter().map(|l| l.len()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lower: f64,
    pub upper: f64,
    pub bins: usize,
    pub smoothing_epsilon: f64,
}

impl HistogramSpec {
    pub fn new(
        lower: f64,
        upper: f64,
        bins: usize,
        smoothing_epsilon: f64,
    ) -> Result<Self, StatsError> {
        let spec = HistogramSpec {
            lower,
            upper,
            bins,
            smoothing_epsilon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if !(self.lower.is_finite() && self.upper.is_finite()) || self.lower >= self.upper {
            return Err(StatsError::InvalidSpec("lower must be below upper"));
        }
        if self.bins < 2 {
            return Err(StatsError::InvalidSpec("need at least 2 bins"));
        }
        if !(self.smoothing_epsilon >= 0.0 && self.smoothing_epsilon.is_finite()) {
            return Err(StatsError::InvalidSpec("smoothing must be nonnegative"));
        }
        Ok(())
    }

    /// Bin index of `v`; values outside the range land in the edge bins.
    pub fn bin_of(&self, v: f64) -> usize {
        let t = (v - self.lower) / (self.upper - self.lower);
        ((t * self.bins as f64).floor().max(0.0) as usize).min(self.bins - 1)
    }
}

impl Default for HistogramSpec {
    /// Bias distributions: 40 bins over [-1, 1] with light smoothing.
    fn default() -> Self {
        HistogramSpec {
            lower: -1.0,
            upper: 1.0,
            bins: 40,
            smoothing_epsilon: 1e-6,
        }
    }
}

/// Normalized bin frequencies with `smoothing_epsilon` added to every bin.
pub fn histogram(values: &[f64], spec: &HistogramSpec) -> Result<Vec<f64>, StatsError> {
    spec.validate()?;
    if values.is_empty() && spec.smoothing_epsilon == 0.0 {
        return Err(StatsError::EmptySample);
    }
    let mut counts = vec![spec.smoothing_epsilon; spec.bins];
    let mut clamped = 0usize;
    for &v in values {
        if !v.is_finite() {
            return Err(StatsError::NonFinite);
        }
        if v < spec.lower || v > spec.upper {
            clamped += 1;
        }
        counts[spec.bin_of(v)] += 1.0;
    }
    if clamped > 0 {
        log::warn!(
            "{clamped} value(s) outside [{}, {}] clamped into edge bins",
            spec.lower,
            spec.upper
        );
    }
    let total: f64 = counts.iter().sum();
    Ok(counts.into_iter().map(|c| c / total).collect())
}

fn check_distribution(p: &[f64]) -> Result<(), StatsError> {
    if let Some(&v) = p.iter().find(|v| v.is_nan() || **v < 0.0 || !v.is_finite()) {
        return Err(StatsError::NegativeProbability(v));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(StatsError::NotNormalized(sum));
    }
    Ok(())
}

/// Jensen-Shannon divergence with base-2 logarithms, bounded by 1.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64, StatsError> {
    if p.len() != q.len() {
        return Err(StatsError::DimensionMismatch(p.len(), q.len()));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let half_kl = |a: f64, m: f64| {
        if a > 0.0 {
            0.5 * a * (a / m).log2()
        } else {
            0.0
        }
    };
    let d: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            half_kl(a, m) + half_kl(b, m)
        })
        .sum();
    Ok(d.clamp(0.0, 1.0))
}
