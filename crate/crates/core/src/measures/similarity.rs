use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{mean_present, Jaccard, SetSimilarity};
use crate::corpus::CorpusSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perspective {
    /// Each cuisine is described by the union of concepts over all language editions.
    Global,
    /// Each cuisine is described by its owner-language article(s) only.
    Native,
}

/// Symmetric cuisine × cuisine similarity; `None` marks missing data.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    perspective: Perspective,
    cuisines: Vec<String>,
    entries: Vec<Option<f64>>,
}

impl SimilarityMatrix {
    pub fn from_entries(
        perspective: Perspective,
        cuisines: Vec<String>,
        entries: Vec<Option<f64>>,
    ) -> Self {
        assert_eq!(entries.len(), cuisines.len() * cuisines.len());
        SimilarityMatrix {
            perspective,
            cuisines,
            entries,
        }
    }

    pub fn perspective(&self) -> Perspective {
        self.perspective
    }

    pub fn cuisines(&self) -> &[String] {
        &self.cuisines
    }

    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.entries[a * self.cuisines.len() + b]
    }

    pub fn index(&self, cuisine: &str) -> Option<usize> {
        self.cuisines.iter().position(|c| c == cuisine)
    }

    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        self.get(self.index(a)?, self.index(b)?)
    }

    /// Defined off-diagonal pairs `(a, b, score)` with `a < b`.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        let n = self.cuisines.len();
        (0..n).flat_map(move |i| {
            (i + 1..n).filter_map(move |j| {
                self.get(i, j)
                    .map(|s| (self.cuisines[i].as_str(), self.cuisines[j].as_str(), s))
            })
        })
    }
}

/// Observer language × cuisine understanding scores; `None` marks missing data.
#[derive(Debug, Clone, PartialEq)]
pub struct UnderstandingMatrix {
    languages: Vec<String>,
    cuisines: Vec<String>,
    entries: Vec<Option<f64>>,
}

impl UnderstandingMatrix {
    pub fn from_entries(
        languages: Vec<String>,
        cuisines: Vec<String>,
        entries: Vec<Option<f64>>,
    ) -> Self {
        assert_eq!(entries.len(), languages.len() * cuisines.len());
        UnderstandingMatrix {
            languages,
            cuisines,
            entries,
        }
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn cuisines(&self) -> &[String] {
        &self.cuisines
    }

    pub fn get(&self, language: usize, cuisine: usize) -> Option<f64> {
        self.entries[language * self.cuisines.len() + cuisine]
    }

    pub fn score(&self, language: &str, cuisine: &str) -> Option<f64> {
        let li = self.languages.iter().position(|l| l == language)?;
        let ci = self.cuisines.iter().position(|c| c == cuisine)?;
        self.get(li, ci)
    }
}

fn union_of<'a>(sets: impl IntoIterator<Item = &'a BTreeSet<String>>) -> Option<BTreeSet<String>> {
    let mut out: Option<BTreeSet<String>> = None;
    for s in sets {
        out.get_or_insert_with(BTreeSet::new)
            .extend(s.iter().cloned());
    }
    out
}

/// Concepts describing cuisine `ci` from its owner languages; `None` if no owner article exists.
fn native_reference(snapshot: &CorpusSnapshot, ci: usize) -> Option<BTreeSet<String>> {
    let cuisine = &snapshot.cuisines()[ci].id;
    union_of(
        snapshot
            .ownership()
            .owners_of(cuisine)
            .filter_map(|l| snapshot.concepts(l, cuisine)),
    )
}

pub fn cultural_similarity(
    snapshot: &CorpusSnapshot,
    perspective: Perspective,
) -> SimilarityMatrix {
    cultural_similarity_with(snapshot, perspective, &Jaccard)
}

pub fn cultural_similarity_with(
    snapshot: &CorpusSnapshot,
    perspective: Perspective,
    measure: &dyn SetSimilarity,
) -> SimilarityMatrix {
    let m = snapshot.cuisines().len();
    let n_lang = snapshot.languages().len();
    let descriptions: Vec<Option<BTreeSet<String>>> = (0..m)
        .map(|ci| match perspective {
            Perspective::Global => {
                union_of((0..n_lang).filter_map(|li| snapshot.concepts_at(li, ci)))
            }
            Perspective::Native => native_reference(snapshot, ci),
        })
        .collect();
    let mut entries = vec![None; m * m];
    for a in 0..m {
        for b in a..m {
            let (Some(da), Some(db)) = (&descriptions[a], &descriptions[b]) else {
                continue;
            };
            let s = if a == b { 1.0 } else { measure.score(da, db) };
            entries[a * m + b] = Some(s);
            entries[b * m + a] = Some(s);
        }
    }
    SimilarityMatrix {
        perspective,
        cuisines: snapshot.cuisines().iter().map(|c| c.id.clone()).collect(),
        entries,
    }
}

pub fn cultural_understanding(snapshot: &CorpusSnapshot) -> UnderstandingMatrix {
    cultural_understanding_with(snapshot, &Jaccard)
}

/// `entry(B, o)` compares B's article about cuisine `o` with the native
/// description of `o` (union over owner languages).
pub fn cultural_understanding_with(
    snapshot: &CorpusSnapshot,
    measure: &dyn SetSimilarity,
) -> UnderstandingMatrix {
    let (n, m) = (snapshot.languages().len(), snapshot.cuisines().len());
    let natives: Vec<Option<BTreeSet<String>>> =
        (0..m).map(|ci| native_reference(snapshot, ci)).collect();
    let mut entries = vec![None; n * m];
    for li in 0..n {
        for (ci, native) in natives.iter().enumerate() {
            if let (Some(observed), Some(native)) = (snapshot.concepts_at(li, ci), native) {
                entries[li * m + ci] = Some(measure.score(observed, native));
            }
        }
    }
    UnderstandingMatrix {
        languages: snapshot
            .languages()
            .iter()
            .map(|l| l.code.clone())
            .collect(),
        cuisines: snapshot.cuisines().iter().map(|c| c.id.clone()).collect(),
        entries,
    }
}

/// Cuisines with at least one country bordering one of `countries`.
pub(crate) fn neighbor_cuisines<'a>(
    snapshot: &'a CorpusSnapshot,
    countries: &BTreeSet<&str>,
) -> BTreeSet<&'a str> {
    let adj = snapshot.adjacency();
    snapshot
        .cuisines()
        .iter()
        .filter(|c| {
            c.country_codes
                .iter()
                .any(|cc| countries.iter().any(|own| adj.are_neighbors(own, cc)))
        })
        .map(|c| c.id.as_str())
        .collect()
}

/// Mean similarity to neighbouring-country cuisines divided by mean similarity
/// to the remaining cuisines. `None` below `min_neighbors` neighbour cuisines,
/// when either side has no defined score, or when the non-neighbour mean is 0.
pub fn neighbor_similarity_ratio(
    similarity: &SimilarityMatrix,
    cuisine: &str,
    snapshot: &CorpusSnapshot,
    min_neighbors: usize,
) -> Option<f64> {
    let target = snapshot.cuisine(cuisine)?;
    let countries: BTreeSet<&str> = target.country_codes.iter().map(String::as_str).collect();
    let neighbors = neighbor_cuisines(snapshot, &countries);
    let neighbors: BTreeSet<&str> = neighbors.into_iter().filter(|c| *c != cuisine).collect();
    if neighbors.len() < min_neighbors {
        return None;
    }
    let others = snapshot
        .cuisines()
        .iter()
        .map(|c| c.id.as_str())
        .filter(|c| *c != cuisine && !neighbors.contains(c));
    let near = mean_present(neighbors.iter().map(|c| similarity.score(cuisine, c)))?;
    let far = mean_present(others.map(|c| similarity.score(cuisine, c)))?;
    if far == 0.0 {
        log::warn!("neighbor similarity ratio for {cuisine} undefined: non-neighbor mean is 0");
        return None;
    }
    Some(near / far)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub language: String,
    pub size_articles: u64,
    pub cuisine_articles: usize,
}

/// Edition size against the number of cuisine articles it contains.
pub fn coverage_stats(snapshot: &CorpusSnapshot) -> Vec<CoverageRow> {
    let m = snapshot.cuisines().len();
    snapshot
        .languages()
        .iter()
        .enumerate()
        .map(|(li, l)| CoverageRow {
            language: l.code.clone(),
            size_articles: l.size_articles,
            cuisine_articles: (0..m)
                .filter(|&ci| snapshot.concepts_at(li, ci).is_some())
                .count(),
        })
        .collect()
}

/// For every cuisine, the Jaccard agreement between each pair of language
/// editions describing it, sorted in descending order.
pub fn pairwise_agreement(snapshot: &CorpusSnapshot) -> BTreeMap<String, Vec<f64>> {
    let n = snapshot.languages().len();
    snapshot
        .cuisines()
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let sets: Vec<&BTreeSet<String>> = (0..n)
                .filter_map(|li| snapshot.concepts_at(li, ci))
                .collect();
            let mut scores: Vec<f64> = (0..sets.len())
                .flat_map(|i| (i + 1..sets.len()).map(move |j| (i, j)))
                .map(|(i, j)| super::jaccard(sets[i], sets[j]))
                .collect();
            scores.sort_by(|a, b| b.total_cmp(a));
            (c.id.clone(), scores)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::{article, cuisine, lang};
    use crate::corpus::{AdjacencyMap, OwnershipMap, SnapshotParts};

    fn snapshot(articles: Vec<crate::corpus::ConceptSet>) -> CorpusSnapshot {
        let mut ownership = OwnershipMap::new();
        ownership.insert("aa", "x");
        ownership.insert("bb", "y");
        ownership.insert("cc", "z");
        CorpusSnapshot::from_parts(SnapshotParts {
            languages: vec![lang("aa"), lang("bb"), lang("cc")],
            cuisines: vec![cuisine("x", "XX"), cuisine("y", "XY"), cuisine("z", "XZ")],
            ownership,
            concept_sets: articles,
            adjacency: AdjacencyMap::default(),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn global_similarity_unions_editions() {
        let s = snapshot(vec![
            article("aa", "x", &["a", "b", "c"]),
            article("bb", "x", &["d"]),
            article("bb", "y", &["c", "d"]),
            article("cc", "y", &["a", "b"]),
        ]);
        // U_x = {a,b,c,d}, U_y = {a,b,c,d}
        let g = cultural_similarity(&s, Perspective::Global);
        assert_eq!(g.score("x", "y"), Some(1.0));
        // Native: x -> aa's {a,b,c}; y -> bb's {c,d}: 1/4
        let nat = cultural_similarity(&s, Perspective::Native);
        assert_eq!(nat.score("x", "y"), Some(0.25));
        assert_eq!(nat.score("y", "x"), Some(0.25));
        assert_eq!(nat.score("x", "x"), Some(1.0));
        // z has no article anywhere: whole row missing
        assert!((0..3).all(|j| g.get(2, j).is_none() && g.get(j, 2).is_none()));
    }

    #[test]
    fn half_overlap() {
        let s = snapshot(vec![
            article("aa", "x", &["a", "b", "c"]),
            article("bb", "y", &["b", "c", "d"]),
            article("cc", "x", &["d"]),
        ]);
        // U_x = {a,b,c,d}, U_y = {b,c,d}: 3/4; with native: {a,b,c} vs {b,c,d}: 2/4
        assert_eq!(
            cultural_similarity(&s, Perspective::Global).score("x", "y"),
            Some(0.75)
        );
        assert_eq!(
            cultural_similarity(&s, Perspective::Native).score("x", "y"),
            Some(0.5)
        );
    }

    #[test]
    fn understanding_against_native() {
        let s = snapshot(vec![
            article("aa", "x", &["a", "c", "d"]),
            article("bb", "x", &["a", "b"]),
            article("cc", "x", &["a", "c", "d"]),
            article("bb", "y", &[]),
        ]);
        let u = cultural_understanding(&s);
        assert_eq!(u.score("bb", "x"), Some(0.25));
        assert_eq!(u.score("cc", "x"), Some(1.0));
        assert_eq!(u.score("aa", "x"), Some(1.0));
        // observer lacks the article
        assert_eq!(u.score("aa", "y"), None);
        // native reference is an empty set, observer is the owner
        assert_eq!(u.score("bb", "y"), Some(0.0));
        // native article absent
        assert_eq!(u.score("aa", "z"), None);
    }

    #[test]
    fn agreement_curves_sorted() {
        let s = snapshot(vec![
            article("aa", "x", &["a", "b"]),
            article("bb", "x", &["a", "b"]),
            article("cc", "x", &["a"]),
        ]);
        let curves = pairwise_agreement(&s);
        assert_eq!(curves["x"], vec![1.0, 0.5, 0.5]);
        assert!(curves["y"].is_empty());
    }

    #[test]
    fn coverage_counts_present_articles() {
        let s = snapshot(vec![article("aa", "x", &["a"]), article("aa", "y", &[])]);
        let rows = coverage_stats(&s);
        assert_eq!(rows[0].cuisine_articles, 2);
        assert_eq!(rows[1].cuisine_articles, 0);
    }

    fn ratio_world(scores: &[(&str, &str, f64)]) -> (CorpusSnapshot, SimilarityMatrix) {
        let mut ownership = OwnershipMap::new();
        let ids = ["a", "b", "c", "d", "e", "f"];
        for id in ids {
            ownership.insert(format!("ll{id}"), id);
        }
        let languages = ids.iter().map(|id| lang(&format!("ll{id}"))).collect();
        let cuisines = ids
            .iter()
            .map(|id| cuisine(id, &format!("X{}", id.to_uppercase())))
            .collect();
        let snap = CorpusSnapshot::from_parts(SnapshotParts {
            languages,
            cuisines,
            ownership,
            adjacency: AdjacencyMap::from_pairs([("XA", "XB"), ("XA", "XC"), ("XA", "XD")])
                .unwrap(),
            ..Default::default()
        })
        .unwrap();
        let n = ids.len();
        let mut entries = vec![None; n * n];
        for i in 0..n {
            entries[i * n + i] = Some(1.0);
        }
        for &(a, b, s) in scores {
            let (i, j) = (
                ids.iter().position(|x| *x == a).unwrap(),
                ids.iter().position(|x| *x == b).unwrap(),
            );
            entries[i * n + j] = Some(s);
            entries[j * n + i] = Some(s);
        }
        let sim = SimilarityMatrix::from_entries(
            Perspective::Global,
            ids.iter().map(|s| s.to_string()).collect(),
            entries,
        );
        (snap, sim)
    }

    #[test]
    fn neighbor_ratio_examples() {
        let (snap, sim) = ratio_world(&[
            ("a", "b", 0.2),
            ("a", "c", 0.1),
            ("a", "d", 0.3),
            ("a", "e", 0.1),
            ("a", "f", 0.1),
        ]);
        let r = neighbor_similarity_ratio(&sim, "a", &snap, 3).unwrap();
        assert!((r - 2.0).abs() < 1e-12, "{r}");
        // b has a single neighbor
        assert_eq!(neighbor_similarity_ratio(&sim, "b", &snap, 3), None);
        assert_eq!(neighbor_similarity_ratio(&sim, "a", &snap, 4), None);

        let (snap, sim) = ratio_world(&[
            ("a", "b", 0.3),
            ("a", "c", 0.3),
            ("a", "d", 0.3),
            ("a", "e", 0.3),
            ("a", "f", 0.3),
        ]);
        let r = neighbor_similarity_ratio(&sim, "a", &snap, 3).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "{r}");

        let (snap, sim) = ratio_world(&[
            ("a", "b", 0.4),
            ("a", "c", 0.4),
            ("a", "d", 0.4),
            ("a", "e", 0.0),
            ("a", "f", 0.0),
        ]);
        assert_eq!(neighbor_similarity_ratio(&sim, "a", &snap, 3), None);
    }
}
