//! Cultural relation measures: similarity and understanding from concept-set
//! overlap, affinity from row-normalized attention, and the self-focus and
//! regional summaries derived from it.

mod bias;
mod similarity;

use std::collections::BTreeSet;

pub use bias::{
    bias, bias_summaries, regional_bias, self_focus, BiasMatrix, BiasSummary, Thresholds,
};
pub use similarity::{
    coverage_stats, cultural_similarity, cultural_similarity_with, cultural_understanding,
    cultural_understanding_with, neighbor_similarity_ratio, pairwise_agreement, CoverageRow,
    Perspective, SimilarityMatrix, UnderstandingMatrix,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("bias undefined for language {language}: {reason}")]
    UndefinedBias {
        language: String,
        reason: &'static str,
    },
    #[error("index out of range: {0}")]
    OutOfRange(String),
}

/// A similarity score between two concept sets, in `[0, 1]`.
pub trait SetSimilarity: Sync {
    fn score(&self, a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64;
}

/// Intersection over union; two empty sets score 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jaccard;

impl SetSimilarity for Jaccard {
    fn score(&self, a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
        jaccard(a, b)
    }
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let inter = small.iter().filter(|x| large.contains(x)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Mean of the present values, `None` when there are none.
pub(crate) fn mean_present(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
