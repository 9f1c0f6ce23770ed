//! Seeded random corpora and slow, literal reference implementations of the
//! measures, used to cross-check the library in tests.

use std::collections::{BTreeMap, BTreeSet};

use ccrm_core::corpus::{
    AdjacencyMap, ConceptSet, Cuisine, LanguageEdition, Month, OwnershipMap, SnapshotParts,
    ViewRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LANGS: [&str; 5] = ["aa", "bb", "cc", "dd", "ee"];
const COUNTRIES: [&str; 6] = ["XA", "XB", "XC", "XD", "XE", "XF"];
const CONCEPTS: usize = 8;

/// Plain data behind a generated snapshot.
#[derive(Debug, Clone)]
pub struct RawWorld {
    pub languages: Vec<String>,
    /// `(cuisine id, country codes)`.
    pub cuisines: Vec<(String, Vec<String>)>,
    /// `(language, cuisine)` ownership pairs.
    pub owns: Vec<(String, String)>,
    pub articles: BTreeMap<(String, String), Vec<String>>,
    /// `(language, cuisine, month, views)`.
    pub views: Vec<(String, String, String, u64)>,
    /// Undirected country pairs.
    pub borders: Vec<(String, String)>,
    pub sizes: Vec<u64>,
}

/// A world with up to `max_languages` languages and `max_cuisines` cuisines
/// (both at least 2, at most 5).
pub fn random_world(seed: u64, max_languages: usize, max_cuisines: usize) -> RawWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_languages.clamp(2, 5));
    let m = rng.random_range(2..=max_cuisines.clamp(2, 5));
    let languages: Vec<String> = LANGS[..n].iter().map(|s| s.to_string()).collect();
    let cuisines: Vec<(String, Vec<String>)> = (0..m)
        .map(|c| {
            let k = if rng.random_bool(0.25) { 2 } else { 1 };
            let mut cc: Vec<String> = Vec::new();
            while cc.len() < k {
                let code = COUNTRIES[rng.random_range(0..COUNTRIES.len())].to_string();
                if !cc.contains(&code) {
                    cc.push(code);
                }
            }
            (format!("k{c}"), cc)
        })
        .collect();
    let mut owns = Vec::new();
    for l in &languages {
        let k = rng.random_range(1..=2.min(m));
        let mut picked: Vec<usize> = Vec::new();
        while picked.len() < k {
            let c = rng.random_range(0..m);
            if !picked.contains(&c) {
                picked.push(c);
            }
        }
        for c in picked {
            owns.push((l.clone(), cuisines[c].0.clone()));
        }
    }
    let mut articles = BTreeMap::new();
    for l in &languages {
        for (c, _) in &cuisines {
            if rng.random_bool(0.7) {
                let concepts = (0..CONCEPTS)
                    .filter(|_| rng.random_bool(0.4))
                    .map(|q| format!("Q{q}"))
                    .collect();
                articles.insert((l.clone(), c.clone()), concepts);
            }
        }
    }
    if articles.is_empty() {
        articles.insert(
            (languages[0].clone(), cuisines[0].0.clone()),
            vec!["Q0".to_string()],
        );
    }
    let mut views = Vec::new();
    for (l, c) in articles.keys() {
        for month in ["2013-05", "2013-06", "2013-07"] {
            if rng.random_bool(0.6) || month == "2013-05" {
                views.push((
                    l.clone(),
                    c.clone(),
                    month.to_string(),
                    rng.random_range(0..50),
                ));
            }
        }
    }
    let mut borders = Vec::new();
    for (i, a) in COUNTRIES.iter().enumerate() {
        for b in &COUNTRIES[i + 1..] {
            if rng.random_bool(0.4) {
                borders.push((a.to_string(), b.to_string()));
            }
        }
    }
    let sizes = (0..n).map(|_| rng.random_range(1_000..1_000_000)).collect();
    RawWorld {
        languages,
        cuisines,
        owns,
        articles,
        views,
        borders,
        sizes,
    }
}

impl RawWorld {
    pub fn to_parts(&self) -> SnapshotParts {
        let mut ownership = OwnershipMap::new();
        for (l, c) in &self.owns {
            ownership.insert(l.clone(), c.clone());
        }
        SnapshotParts {
            languages: self
                .languages
                .iter()
                .zip(&self.sizes)
                .map(|(l, s)| LanguageEdition {
                    code: l.clone(),
                    name: l.to_uppercase(),
                    size_articles: *s,
                })
                .collect(),
            cuisines: self
                .cuisines
                .iter()
                .map(|(id, cc)| Cuisine {
                    id: id.clone(),
                    name: id.clone(),
                    country_codes: cc.clone(),
                })
                .collect(),
            ownership,
            concept_sets: self
                .articles
                .iter()
                .map(|((l, c), q)| ConceptSet {
                    language: l.clone(),
                    cuisine: c.clone(),
                    concepts: q.iter().cloned().collect(),
                })
                .collect(),
            views: self
                .views
                .iter()
                .map(|(l, c, m, v)| ViewRecord {
                    language: l.clone(),
                    cuisine: c.clone(),
                    month: m.parse::<Month>().expect("valid month"),
                    views: *v,
                })
                .collect(),
            adjacency: AdjacencyMap::from_pairs(
                self.borders.iter().map(|(a, b)| (a.as_str(), b.as_str())),
            )
            .expect("valid borders"),
            ..Default::default()
        }
    }

    fn owns(&self, l: &str, c: &str) -> bool {
        self.owns.iter().any(|(a, b)| a == l && b == c)
    }

    fn article(&self, l: &str, c: &str) -> Option<&Vec<String>> {
        self.articles.get(&(l.to_string(), c.to_string()))
    }

    fn countries_of(&self, c: &str) -> Vec<String> {
        self.cuisines
            .iter()
            .find(|(id, _)| id == c)
            .map(|(_, cc)| cc.clone())
            .unwrap_or_default()
    }

    fn borders(&self, a: &str, b: &str) -> bool {
        self.borders
            .iter()
            .any(|(x, y)| (x == a && y == b) || (x == b && y == a))
    }
}

/// |a ∩ b| / |a ∪ b| by counting, 0 for two empty sets.
pub fn naive_jaccard(a: &[String], b: &[String]) -> f64 {
    let mut inter = 0usize;
    let mut union: Vec<&String> = Vec::new();
    for x in a.iter().chain(b) {
        if !union.contains(&x) {
            union.push(x);
        }
    }
    for x in &union {
        if a.contains(x) && b.contains(x) {
            inter += 1;
        }
    }
    if union.is_empty() {
        0.0
    } else {
        inter as f64 / union.len() as f64
    }
}

fn union_of(sets: &[&Vec<String>]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in sets {
        for x in s.iter() {
            if !out.contains(x) {
                out.push(x.clone());
            }
        }
    }
    out
}

fn native_description(w: &RawWorld, c: &str) -> Option<Vec<String>> {
    let owner_articles: Vec<&Vec<String>> = w
        .languages
        .iter()
        .filter(|l| w.owns(l, c))
        .filter_map(|l| w.article(l, c))
        .collect();
    (!owner_articles.is_empty()).then(|| union_of(&owner_articles))
}

fn global_description(w: &RawWorld, c: &str) -> Option<Vec<String>> {
    let all: Vec<&Vec<String>> = w.languages.iter().filter_map(|l| w.article(l, c)).collect();
    (!all.is_empty()).then(|| union_of(&all))
}

pub fn naive_similarity(w: &RawWorld, native: bool, a: &str, b: &str) -> Option<f64> {
    let describe = |c| {
        if native {
            native_description(w, c)
        } else {
            global_description(w, c)
        }
    };
    let (da, db) = (describe(a)?, describe(b)?);
    Some(if a == b { 1.0 } else { naive_jaccard(&da, &db) })
}

pub fn naive_understanding(w: &RawWorld, l: &str, c: &str) -> Option<f64> {
    Some(naive_jaccard(w.article(l, c)?, &native_description(w, c)?))
}

/// `f(l, o)`: summed views or outlink counts, `None` without an article.
pub fn naive_attention(w: &RawWorld, views: bool, l: &str, c: &str) -> Option<f64> {
    let article = w.article(l, c)?;
    if views {
        Some(
            w.views
                .iter()
                .filter(|(a, b, _, _)| a == l && b == c)
                .map(|v| v.3 as f64)
                .sum(),
        )
    } else {
        Some(article.len() as f64)
    }
}

fn attention_or_zero(w: &RawWorld, views: bool, l: &str, c: &str) -> f64 {
    naive_attention(w, views, l, c).unwrap_or(0.0)
}

fn total(w: &RawWorld, views: bool, l: &str) -> f64 {
    w.cuisines
        .iter()
        .map(|(c, _)| attention_or_zero(w, views, l, c))
        .sum()
}

/// Literal evaluation of the bias definition, `None` where it is undefined.
pub fn naive_bias(w: &RawWorld, views: bool, l: &str, o: &str) -> Option<f64> {
    let t = total(w, views, l);
    if t <= 0.0 {
        return None;
    }
    let first = attention_or_zero(w, views, l, o) / t;
    let mut shares = Vec::new();
    for other in &w.languages {
        if other == l {
            continue;
        }
        let to = total(w, views, other);
        if to > 0.0 {
            shares.push(attention_or_zero(w, views, other, o) / to);
        }
    }
    if shares.is_empty() {
        return None;
    }
    Some(first - shares.iter().sum::<f64>() / shares.len() as f64)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn naive_self_focus(w: &RawWorld, views: bool, l: &str, min_cuisines: usize) -> Option<f64> {
    let covered: Vec<&String> = w
        .cuisines
        .iter()
        .map(|(c, _)| c)
        .filter(|c| w.article(l, c).is_some())
        .collect();
    if covered.len() < min_cuisines {
        return None;
    }
    let mut own = Vec::new();
    let mut other = Vec::new();
    for c in covered {
        let b = naive_bias(w, views, l, c)?;
        if w.owns(l, c) {
            own.push(b);
        } else {
            other.push(b);
        }
    }
    Some(mean(&own)? - mean(&other)?)
}

fn language_countries(w: &RawWorld, l: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (c, cc) in &w.cuisines {
        if w.owns(l, c) {
            for x in cc {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
        }
    }
    out
}

fn borders_any(w: &RawWorld, from: &[String], cuisine: &str) -> bool {
    w.countries_of(cuisine)
        .iter()
        .any(|cc| from.iter().any(|f| w.borders(f, cc)))
}

pub fn naive_regional_bias(
    w: &RawWorld,
    views: bool,
    l: &str,
    min_neighbors: usize,
) -> Option<f64> {
    let home = language_countries(w, l);
    let mut near_ids = Vec::new();
    let mut far_ids = Vec::new();
    for (c, _) in &w.cuisines {
        if w.owns(l, c) {
            continue;
        }
        if borders_any(w, &home, c) {
            near_ids.push(c);
        } else {
            far_ids.push(c);
        }
    }
    if near_ids.len() < min_neighbors {
        return None;
    }
    let covered_bias = |ids: &[&String]| -> Vec<f64> {
        ids.iter()
            .filter(|c| w.article(l, c).is_some())
            .filter_map(|c| naive_bias(w, views, l, c))
            .collect()
    };
    Some(mean(&covered_bias(&near_ids))? - mean(&covered_bias(&far_ids))?)
}

pub fn naive_neighbor_ratio(
    w: &RawWorld,
    native: bool,
    cuisine: &str,
    min_neighbors: usize,
) -> Option<f64> {
    let home = w.countries_of(cuisine);
    let mut near = Vec::new();
    let mut far = Vec::new();
    let mut near_count = 0;
    for (c, _) in &w.cuisines {
        if c == cuisine {
            continue;
        }
        let is_near = borders_any(w, &home, c);
        near_count += is_near as usize;
        if let Some(s) = naive_similarity(w, native, cuisine, c) {
            if is_near {
                near.push(s);
            } else {
                far.push(s);
            }
        }
    }
    if near_count < min_neighbors {
        return None;
    }
    let (a, b) = (mean(&near)?, mean(&far)?);
    (b != 0.0).then(|| a / b)
}

/// Rank of each value counting strictly smaller values, ties averaged.
pub fn naive_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|u| *u < v).count() as f64;
            let equal = x.iter().filter(|u| *u == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Spearman's rho via the tie-corrected rank-difference formula
/// `(Sx + Sy - Σd²) / (2 sqrt(Sx Sy))` with `S = (n³ - n)/12 - Σ(t³ - t)/12`.
pub fn rank_formula_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (rx, ry) = (naive_ranks(x), naive_ranks(y));
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    let tie_term = |v: &[f64]| -> f64 {
        let distinct: BTreeSet<u64> = v.iter().map(|f| f.to_bits()).collect();
        distinct
            .into_iter()
            .map(|bits| {
                let t = v.iter().filter(|f| f.to_bits() == bits).count() as f64;
                (t * t * t - t) / 12.0
            })
            .sum()
    };
    let sx = (n * n * n - n) / 12.0 - tie_term(x);
    let sy = (n * n * n - n) / 12.0 - tie_term(y);
    if sx == 0.0 || sy == 0.0 {
        return None;
    }
    Some((sx + sy - d2) / (2.0 * (sx * sy).sqrt()))
}

/// Random attention rows with some zero cells and occasionally a zero row.
pub fn random_attention_rows(rng: &mut impl Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.05) {
                vec![0.0; m]
            } else {
                (0..m)
                    .map(|_| {
                        if rng.random_bool(0.2) {
                            0.0
                        } else {
                            rng.random_range(0.0..100.0)
                        }
                    })
                    .collect()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleReport {
    pub max_error: f64,
    /// Number of defined values compared, per measure.
    pub compared: BTreeMap<&'static str, usize>,
}

/// Largest absolute difference between the library and the reference
/// implementations over `worlds` random corpora; `Err` names the first cell
/// where one side is defined and the other is not.
pub fn oracle_max_error(worlds: usize, seed: u64) -> Result<OracleReport, String> {
    use ccrm_core::corpus::{AttentionSource, CorpusSnapshot};
    use ccrm_core::measures::{
        cultural_similarity, cultural_understanding, jaccard, neighbor_similarity_ratio,
        regional_bias, self_focus, BiasMatrix, Perspective,
    };

    let mut report = OracleReport::default();
    let mut cmp = |what: String, lib: Option<f64>, naive: Option<f64>| -> Result<(), String> {
        match (lib, naive) {
            (Some(a), Some(b)) => {
                report.max_error = report.max_error.max((a - b).abs());
                let measure = what.split_whitespace().nth(2).unwrap_or("?");
                let key = [
                    "jaccard",
                    "similarity",
                    "ratio",
                    "understanding",
                    "bias",
                    "self-focus",
                    "regional",
                ]
                .into_iter()
                .find(|k| *k == measure)
                .unwrap_or("?");
                *report.compared.entry(key).or_default() += 1;
                Ok(())
            }
            (None, None) => Ok(()),
            _ => Err(format!("{what}: library {lib:?}, reference {naive:?}")),
        }
    };
    for i in 0..worlds {
        let w = random_world(seed.wrapping_add(i as u64), 5, 5);
        let snap =
            CorpusSnapshot::from_parts(w.to_parts()).map_err(|e| format!("world {i}: {e}"))?;
        let cuisines: Vec<&str> = w.cuisines.iter().map(|(c, _)| c.as_str()).collect();
        for a in w.articles.values() {
            for b in w.articles.values() {
                let sa: BTreeSet<&String> = a.iter().collect();
                let sb: BTreeSet<&String> = b.iter().collect();
                cmp(
                    format!("world {i} jaccard"),
                    Some(jaccard(&sa, &sb)),
                    Some(naive_jaccard(a, b)),
                )?;
            }
        }
        for (perspective, native) in [(Perspective::Global, false), (Perspective::Native, true)] {
            let sim = cultural_similarity(&snap, perspective);
            for a in &cuisines {
                for b in &cuisines {
                    cmp(
                        format!("world {i} similarity {a} {b}"),
                        sim.score(a, b),
                        naive_similarity(&w, native, a, b),
                    )?;
                }
                for min in [1, 2, 3] {
                    cmp(
                        format!("world {i} ratio {a}"),
                        neighbor_similarity_ratio(&sim, a, &snap, min),
                        naive_neighbor_ratio(&w, native, a, min),
                    )?;
                }
            }
        }
        let und = cultural_understanding(&snap);
        for l in &w.languages {
            for c in &cuisines {
                cmp(
                    format!("world {i} understanding {l} {c}"),
                    und.score(l, c),
                    naive_understanding(&w, l, c),
                )?;
            }
        }
        for (source, views) in [
            (AttentionSource::Views, true),
            (AttentionSource::Outlinks, false),
        ] {
            let att = snap
                .attention_matrix(source, None)
                .map_err(|e| e.to_string())?;
            let bias = BiasMatrix::compute(&att);
            for l in &w.languages {
                for c in &cuisines {
                    cmp(
                        format!("world {i} bias {l} {c}"),
                        bias.value(l, c),
                        naive_bias(&w, views, l, c),
                    )?;
                }
                for min in [1, 2, 3] {
                    cmp(
                        format!("world {i} self-focus {l}"),
                        self_focus(&bias, snap.ownership(), l, min),
                        naive_self_focus(&w, views, l, min),
                    )?;
                    cmp(
                        format!("world {i} regional {l}"),
                        regional_bias(&bias, &snap, l, min),
                        naive_regional_bias(&w, views, l, min),
                    )?;
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasIdentities {
    pub max_abs_column_sum: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub max_rescale_change: f64,
}

/// Column sums, range and row-rescaling invariance of the bias matrix over
/// `matrices` random attention matrices in which every row is eligible.
pub fn bias_identities(matrices: usize, seed: u64) -> BiasIdentities {
    use ccrm_core::corpus::{AttentionMatrix, AttentionSource};
    use ccrm_core::measures::BiasMatrix;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BiasIdentities {
        max_abs_column_sum: 0.0,
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
        max_rescale_change: 0.0,
    };
    let build = |rows: Vec<Vec<f64>>| {
        let (n, m) = (rows.len(), rows[0].len());
        AttentionMatrix::from_rows(
            AttentionSource::Simulated,
            (0..n).map(|i| format!("l{i}")).collect(),
            (0..m).map(|i| format!("c{i}")).collect(),
            rows,
            None,
        )
        .expect("valid attention")
    };
    for _ in 0..matrices {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(1..=8);
        let mut rows = random_attention_rows(&mut rng, n, m);
        for row in &mut rows {
            if row.iter().all(|v| *v == 0.0) {
                row[0] = 1.0;
            }
        }
        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let k = 10f64.powf(rng.random_range(-3.0..3.0));
                r.iter().map(|v| v * k).collect()
            })
            .collect();
        let b = BiasMatrix::compute(&build(rows));
        let s = BiasMatrix::compute(&build(scaled));
        for o in 0..m {
            let col: f64 = (0..n).map(|l| b.get(l, o).expect("eligible row")).sum();
            out.max_abs_column_sum = out.max_abs_column_sum.max(col.abs());
            for l in 0..n {
                let v = b.get(l, o).expect("eligible row");
                out.min_value = out.min_value.min(v);
                out.max_value = out.max_value.max(v);
                out.max_rescale_change =
                    out.max_rescale_change.max((v - s.get(l, o).unwrap()).abs());
            }
        }
    }
    out
}

/// Largest difference between the library's Spearman rho and the rank
/// formula over `cases` random integer sequences (length 3..=20, with ties).
pub fn spearman_max_error(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < cases {
        let n = rng.random_range(3..=20);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
        let Some(expected) = rank_formula_spearman(&x, &y) else {
            continue;
        };
        let got = ccrm_core::stats::spearman_rho(&x, &y).expect("non-constant input");
        worst = worst.max((got - expected).abs());
        done += 1;
    }
    worst
}
