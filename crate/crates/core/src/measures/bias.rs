use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::similarity::neighbor_cuisines;
use super::{mean_present, MeasureError};
use crate::corpus::{AttentionMatrix, AttentionSource, CorpusSnapshot, OwnershipMap};

/// Eligibility thresholds for the per-language summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_cuisines: usize,
    pub min_neighbors: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_cuisines: 3,
            min_neighbors: 3,
        }
    }
}

/// Attention share of `o` within language `l`'s total, minus the mean share
/// the other languages give `o`. Languages with zero total attention are left
/// out of the reference mean.
pub fn bias(attention: &AttentionMatrix, l: usize, o: usize) -> Result<f64, MeasureError> {
    let n = attention.languages().len();
    if l >= n || o >= attention.cuisines().len() {
        return Err(MeasureError::OutOfRange(format!("({l}, {o})")));
    }
    let total = attention.row_total(l);
    if total <= 0.0 {
        return Err(MeasureError::UndefinedBias {
            language: attention.languages()[l].clone(),
            reason: "zero total attention",
        });
    }
    let own_share = attention.get(l, o) / total;
    let mut sum = 0.0;
    let mut count = 0usize;
    for other in (0..n).filter(|&x| x != l) {
        let t = attention.row_total(other);
        if t > 0.0 {
            sum += attention.get(other, o) / t;
            count += 1;
        }
    }
    if count == 0 {
        return Err(MeasureError::UndefinedBias {
            language: attention.languages()[l].clone(),
            reason: "no other language with nonzero attention",
        });
    }
    Ok(own_share - sum / count as f64)
}

/// `bias(l, o)` for every cell. Rows of languages for which the bias is
/// undefined are `None`; `covered` records where the language has an article.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasMatrix {
    source: AttentionSource,
    languages: Vec<String>,
    cuisines: Vec<String>,
    values: Vec<Option<f64>>,
    covered: Vec<bool>,
}

impl BiasMatrix {
    pub fn compute(attention: &AttentionMatrix) -> Self {
        let (n, m) = (attention.languages().len(), attention.cuisines().len());
        let totals: Vec<f64> = (0..n).map(|l| attention.row_total(l)).collect();
        let eligible: Vec<usize> = (0..n).filter(|&l| totals[l] > 0.0).collect();
        let share = |l: usize, o: usize| attention.get(l, o) / totals[l];
        let col_sums: Vec<f64> = (0..m)
            .map(|o| eligible.iter().map(|&l| share(l, o)).sum())
            .collect();
        let mut values = vec![None; n * m];
        if eligible.len() >= 2 {
            let others = (eligible.len() - 1) as f64;
            for &l in &eligible {
                for o in 0..m {
                    let s = share(l, o);
                    values[l * m + o] = Some(s - (col_sums[o] - s) / others);
                }
            }
        }
        let covered = (0..n)
            .flat_map(|l| (0..m).map(move |o| (l, o)))
            .map(|(l, o)| !attention.is_missing(l, o))
            .collect();
        BiasMatrix {
            source: attention.source(),
            languages: attention.languages().to_vec(),
            cuisines: attention.cuisines().to_vec(),
            values,
            covered,
        }
    }

    /// Rebuilds a matrix from stored entries; cells with a value count as covered.
    pub fn from_entries(
        source: AttentionSource,
        languages: Vec<String>,
        cuisines: Vec<String>,
        values: Vec<Option<f64>>,
    ) -> Self {
        assert_eq!(values.len(), languages.len() * cuisines.len());
        let covered = values.iter().map(Option::is_some).collect();
        BiasMatrix {
            source,
            languages,
            cuisines,
            values,
            covered,
        }
    }

    pub fn source(&self) -> AttentionSource {
        self.source
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn cuisines(&self) -> &[String] {
        &self.cuisines
    }

    pub fn get(&self, l: usize, o: usize) -> Option<f64> {
        self.values[l * self.cuisines.len() + o]
    }

    pub fn is_covered(&self, l: usize, o: usize) -> bool {
        self.covered[l * self.cuisines.len() + o]
    }

    /// The value where the language has an article, otherwise `None`.
    pub fn covered_value(&self, l: usize, o: usize) -> Option<f64> {
        self.get(l, o).filter(|_| self.is_covered(l, o))
    }

    pub fn language_index(&self, code: &str) -> Option<usize> {
        self.languages.iter().position(|l| l == code)
    }

    pub fn cuisine_index(&self, id: &str) -> Option<usize> {
        self.cuisines.iter().position(|c| c == id)
    }

    pub fn value(&self, language: &str, cuisine: &str) -> Option<f64> {
        self.get(self.language_index(language)?, self.cuisine_index(cuisine)?)
    }
}

fn mean_difference(
    bias: &BiasMatrix,
    l: usize,
    first: impl Iterator<Item = usize>,
    second: impl Iterator<Item = usize>,
) -> Option<f64> {
    let a = mean_present(first.map(|o| bias.covered_value(l, o)))?;
    let b = mean_present(second.map(|o| bias.covered_value(l, o)))?;
    Some(a - b)
}

/// Mean bias toward the language's own cuisines minus mean bias toward the
/// others, over cuisines the language covers. `None` when it covers fewer
/// than `min_cuisines` cuisines or either group is empty.
pub fn self_focus(
    bias: &BiasMatrix,
    ownership: &OwnershipMap,
    language: &str,
    min_cuisines: usize,
) -> Option<f64> {
    let l = bias.language_index(language)?;
    let m = bias.cuisines().len();
    let covered = (0..m).filter(|&o| bias.is_covered(l, o)).count();
    if covered < min_cuisines {
        return None;
    }
    let owned = |o: &usize| ownership.owns(language, &bias.cuisines()[*o]);
    mean_difference(bias, l, (0..m).filter(owned), (0..m).filter(|o| !owned(o)))
}

/// Mean bias toward cuisines of neighbouring countries minus mean bias toward
/// non-neighbouring ones, own cuisines excluded from both. `None` when fewer
/// than `min_neighbors` neighbour cuisines exist.
pub fn regional_bias(
    bias: &BiasMatrix,
    snapshot: &CorpusSnapshot,
    language: &str,
    min_neighbors: usize,
) -> Option<f64> {
    let l = bias.language_index(language)?;
    let countries = snapshot.language_countries(language);
    let own = snapshot.ownership().own_cuisines(language)?;
    let neighbors: BTreeSet<&str> = neighbor_cuisines(snapshot, &countries)
        .into_iter()
        .filter(|c| !own.contains(*c))
        .collect();
    if neighbors.len() < min_neighbors {
        return None;
    }
    let idx = |c: &str| bias.cuisine_index(c);
    let near = neighbors.iter().filter_map(|c| idx(c));
    let far = snapshot
        .cuisines()
        .iter()
        .map(|c| c.id.as_str())
        .filter(|c| !own.contains(*c) && !neighbors.contains(c))
        .filter_map(idx);
    mean_difference(bias, l, near, far)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    pub language: String,
    pub self_focus: Option<f64>,
    pub regional: Option<f64>,
}

pub fn bias_summaries(
    bias: &BiasMatrix,
    snapshot: &CorpusSnapshot,
    thresholds: Thresholds,
) -> Vec<BiasSummary> {
    snapshot
        .languages()
        .iter()
        .map(|l| BiasSummary {
            language: l.code.clone(),
            self_focus: self_focus(bias, snapshot.ownership(), &l.code, thresholds.min_cuisines),
            regional: regional_bias(bias, snapshot, &l.code, thresholds.min_neighbors),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> AttentionMatrix {
        let n = rows.len();
        let m = rows[0].len();
        AttentionMatrix::from_rows(
            AttentionSource::Simulated,
            (0..n).map(|i| format!("l{i}")).collect(),
            (0..m).map(|i| format!("c{i}")).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
            None,
        )
        .unwrap()
    }

    fn diagonal_ownership(n: usize) -> OwnershipMap {
        let mut own = OwnershipMap::new();
        for i in 0..n {
            own.insert(format!("l{i}"), format!("c{i}"));
        }
        own
    }

    #[test]
    fn uniform_attention_has_no_bias() {
        let a = matrix(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let b = BiasMatrix::compute(&a);
        for l in 0..2 {
            for o in 0..2 {
                assert_eq!(bias(&a, l, o).unwrap(), 0.0);
                assert_eq!(b.get(l, o), Some(0.0));
            }
        }
        assert_eq!(self_focus(&b, &diagonal_ownership(2), "l0", 1), Some(0.0));
    }

    #[test]
    fn three_language_example() {
        let a = matrix(&[&[3.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(bias(&a, 0, 0).unwrap(), 0.25);
        assert_eq!(BiasMatrix::compute(&a).get(0, 0), Some(0.25));
    }

    #[test]
    fn extreme_matrix() {
        let a = matrix(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(bias(&a, 0, 0).unwrap(), 1.0);
        assert_eq!(bias(&a, 0, 1).unwrap(), -1.0);
        let b = BiasMatrix::compute(&a);
        assert_eq!(self_focus(&b, &diagonal_ownership(2), "l0", 1), Some(2.0));
        assert_eq!(self_focus(&b, &diagonal_ownership(2), "l1", 1), Some(2.0));
        assert_eq!(self_focus(&b, &diagonal_ownership(2), "l0", 3), None);
    }

    #[test]
    fn zero_attention_language() {
        let a = matrix(&[&[0.0, 0.0], &[1.0, 3.0], &[1.0, 1.0]]);
        assert!(matches!(
            bias(&a, 0, 0),
            Err(MeasureError::UndefinedBias { .. })
        ));
        // excluded from the reference mean of the others
        assert_eq!(bias(&a, 1, 0).unwrap(), 0.25 - 0.5);
        let b = BiasMatrix::compute(&a);
        assert_eq!(b.get(0, 0), None);
        assert_eq!(b.get(1, 0), Some(-0.25));

        let lonely = matrix(&[&[1.0, 2.0], &[0.0, 0.0]]);
        assert!(matches!(
            bias(&lonely, 0, 0),
            Err(MeasureError::UndefinedBias { .. })
        ));
        assert_eq!(BiasMatrix::compute(&lonely).get(0, 0), None);
    }

    #[test]
    fn self_focus_ignores_uncovered_cuisines() {
        let a = AttentionMatrix::from_rows(
            AttentionSource::Views,
            vec!["l0".into(), "l1".into()],
            vec!["c0".into(), "c1".into(), "c2".into()],
            vec![vec![2.0, 2.0, 0.0], vec![1.0, 1.0, 2.0]],
            Some(vec![vec![false, false, true], vec![false, false, false]]),
        )
        .unwrap();
        let b = BiasMatrix::compute(&a);
        // bias(l0) = (0.5-0.25, 0.5-0.25, 0-0.5); c2 uncovered for l0
        assert_eq!(self_focus(&b, &diagonal_ownership(2), "l0", 2), Some(0.0));
        assert_eq!(self_focus(&b, &diagonal_ownership(2), "l0", 3), None);
    }
}
