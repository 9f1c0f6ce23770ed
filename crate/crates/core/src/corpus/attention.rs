use serde::{Deserialize, Serialize};

use super::{CorpusError, CorpusSnapshot, MonthRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionSource {
    Views,
    Outlinks,
    /// Synthetic matrices produced by the simulator.
    Simulated,
}

/// Nonnegative attention `f(l, o)` of language `l` toward cuisine `o`.
///
/// Absent articles contribute zero attention and are flagged in the missing mask.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMatrix {
    source: AttentionSource,
    languages: Vec<String>,
    cuisines: Vec<String>,
    values: Vec<f64>,
    missing: Vec<bool>,
}

impl AttentionMatrix {
    /// Builds a matrix from row-major values. `missing` defaults to all-present.
    pub fn from_rows(
        source: AttentionSource,
        languages: Vec<String>,
        cuisines: Vec<String>,
        rows: Vec<Vec<f64>>,
        missing: Option<Vec<Vec<bool>>>,
    ) -> Result<Self, CorpusError> {
        let (n, m) = (languages.len(), cuisines.len());
        if rows.len() != n || rows.iter().any(|r| r.len() != m) {
            return Err(CorpusError::InvariantViolation(format!(
                "attention matrix must be {n}x{m}"
            )));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(CorpusError::InvariantViolation(format!(
                "attention values must be finite and nonnegative, found {v}"
            )));
        }
        let missing = match missing {
            Some(mask) => {
                if mask.len() != n || mask.iter().any(|r| r.len() != m) {
                    return Err(CorpusError::InvariantViolation("missing mask shape".into()));
                }
                mask.into_iter().flatten().collect()
            }
            None => vec![false; n * m],
        };
        Ok(AttentionMatrix {
            source,
            languages,
            cuisines,
            values,
            missing,
        })
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

    pub fn get(&self, language: usize, cuisine: usize) -> f64 {
        self.values[language * self.cuisines.len() + cuisine]
    }

    pub fn is_missing(&self, language: usize, cuisine: usize) -> bool {
        self.missing[language * self.cuisines.len() + cuisine]
    }

    pub fn row(&self, language: usize) -> &[f64] {
        let m = self.cuisines.len();
        &self.values[language * m..(language + 1) * m]
    }

    pub fn row_total(&self, language: usize) -> f64 {
        self.row(language).iter().sum()
    }

    pub fn value(&self, language: &str, cuisine: &str) -> Option<f64> {
        let li = self.languages.iter().position(|l| l == language)?;
        let ci = self.cuisines.iter().position(|c| c == cuisine)?;
        Some(self.get(li, ci))
    }
}

impl CorpusSnapshot {
    /// Attention matrix from summed monthly views or from outlink counts.
    ///
    /// `month_range` only applies to [`AttentionSource::Views`]; a range (or a
    /// snapshot) without any view records yields [`CorpusError::EmptyRange`].
    pub fn attention_matrix(
        &self,
        source: AttentionSource,
        month_range: Option<MonthRange>,
    ) -> Result<AttentionMatrix, CorpusError> {
        let (n, m) = (self.languages.len(), self.cuisines.len());
        let mut values = vec![vec![0.0; m]; n];
        let mut missing = vec![vec![true; m]; n];
        for (&(li, ci), cs) in &self.articles {
            missing[li][ci] = false;
            if source == AttentionSource::Outlinks {
                values[li][ci] = cs.concepts.len() as f64;
            }
        }
        match source {
            AttentionSource::Outlinks => {}
            AttentionSource::Views => {
                let mut selected = 0usize;
                for v in &self.views {
                    if month_range.is_some_and(|r| !r.contains(v.month)) {
                        continue;
                    }
                    let li = self.lang_index[&v.language];
                    let ci = self.cuisine_index[&v.cuisine];
                    values[li][ci] += v.views as f64;
                    selected += 1;
                }
                if selected == 0 {
                    let label = month_range.map_or_else(|| "(all)".to_owned(), |r| r.to_string());
                    return Err(CorpusError::EmptyRange(label));
                }
            }
            AttentionSource::Simulated => {
                return Err(CorpusError::InvariantViolation(
                    "snapshots carry no simulated attention".into(),
                ))
            }
        }
        AttentionMatrix::from_rows(
            source,
            self.languages.iter().map(|l| l.code.clone()).collect(),
            self.cuisines.iter().map(|c| c.id.clone()).collect(),
            values,
            Some(missing),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::{article, cuisine, lang};
    use crate::corpus::{AdjacencyMap, OwnershipMap, SnapshotParts, ViewRecord};

    fn snapshot() -> CorpusSnapshot {
        let mut ownership = OwnershipMap::new();
        ownership.insert("aa", "x");
        ownership.insert("bb", "y");
        let view = |m: &str, v| ViewRecord {
            language: "aa".into(),
            cuisine: "x".into(),
            month: m.parse().unwrap(),
            views: v,
        };
        CorpusSnapshot::from_parts(SnapshotParts {
            languages: vec![lang("aa"), lang("bb")],
            cuisines: vec![cuisine("x", "XX"), cuisine("y", "XY")],
            ownership,
            concept_sets: vec![article(
                "aa",
                "x",
                &["Q1", "Q2", "Q3", "Q4", "Q5", "Q6", "Q7"],
            )],
            views: vec![
                view("2013-05", 10),
                view("2013-06", 5),
                view("2014-01", 100),
            ],
            adjacency: AdjacencyMap::default(),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn outlinks_count_concepts() {
        let a = snapshot()
            .attention_matrix(AttentionSource::Outlinks, None)
            .unwrap();
        assert_eq!(a.value("aa", "x"), Some(7.0));
        assert_eq!(a.value("bb", "x"), Some(0.0));
        assert!(a.is_missing(1, 0));
        assert!(!a.is_missing(0, 0));
    }

    #[test]
    fn views_sum_over_range() {
        let s = snapshot();
        let r = "2013-05:2013-06".parse().unwrap();
        let a = s.attention_matrix(AttentionSource::Views, Some(r)).unwrap();
        assert_eq!(a.value("aa", "x"), Some(15.0));
        let all = s.attention_matrix(AttentionSource::Views, None).unwrap();
        assert_eq!(all.value("aa", "x"), Some(115.0));
    }

    #[test]
    fn empty_range() {
        let r = "2015-01:2015-02".parse().unwrap();
        assert!(matches!(
            snapshot().attention_matrix(AttentionSource::Views, Some(r)),
            Err(CorpusError::EmptyRange(_))
        ));
    }

    #[test]
    fn rejects_negative_values() {
        let r = AttentionMatrix::from_rows(
            AttentionSource::Simulated,
            vec!["a".into()],
            vec!["x".into()],
            vec![vec![-1.0]],
            None,
        );
        assert!(r.is_err());
    }
}
