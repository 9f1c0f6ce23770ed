//! Validation against external rankings, correlations among the measures,
//! and crowd-task generation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSnapshot;
use crate::measures::{BiasMatrix, SimilarityMatrix, UnderstandingMatrix};
use crate::stats::{
    align_rankings, spearman, Correlation, PermutationTest, RankedPairList, StatsError,
};

#[derive(Debug, thiserror::Error)]
pub enum ValidateError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: invalid sidecar: {message}")]
    Sidecar { path: PathBuf, message: String },
    #[error("invalid pair key {0:?}, expected AA|BB")]
    InvalidKey(String),
    #[error("undirected ranking lists both {0} and its reverse")]
    InconsistentDirection(String),
    #[error("need at least {need} ranked pairs, got {have}")]
    InsufficientPairs { have: usize, need: usize },
    #[error("k must be positive")]
    InvalidK,
    #[error("no comparison shares any key")]
    EmptyIntersection,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub fn pair_key(a: &str, b: &str) -> String {
    format!("{a}|{b}")
}

pub fn split_key(key: &str) -> Option<(&str, &str)> {
    let (a, b) = key.split_once('|')?;
    (!a.is_empty() && !b.is_empty() && !b.contains('|')).then_some((a, b))
}

fn is_country(code: &str) -> bool {
    code.len() == 2 && code.bytes().all(|b| b.is_ascii_uppercase())
}

/// A ranking of country pairs from an outside source.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalRanking {
    pub label: String,
    pub directed: bool,
    pub pairs: RankedPairList,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    directed: bool,
}

impl ExternalRanking {
    /// Validates keys; undirected keys are stored in sorted order.
    pub fn new(
        label: impl Into<String>,
        directed: bool,
        pairs: RankedPairList,
    ) -> Result<Self, ValidateError> {
        let label = label.into();
        let mut out = Vec::with_capacity(pairs.len());
        let mut seen = BTreeSet::new();
        for (key, score) in pairs.pairs() {
            let (a, b) = split_key(key).ok_or_else(|| ValidateError::InvalidKey(key.clone()))?;
            if !is_country(a) || !is_country(b) || a == b {
                return Err(ValidateError::InvalidKey(key.clone()));
            }
            let canonical = if directed || a < b {
                pair_key(a, b)
            } else {
                pair_key(b, a)
            };
            if !seen.insert(canonical.clone()) {
                return Err(ValidateError::InconsistentDirection(canonical));
            }
            out.push((canonical, *score));
        }
        let pairs = RankedPairList::new(label.clone(), out)?;
        Ok(ExternalRanking {
            label,
            directed,
            pairs,
        })
    }

    /// Sidecar path of a ranking file: same stem, `.json` extension.
    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    /// Reads a `key<TAB>score` file and its optional sidecar. Without a
    /// sidecar the ranking is undirected and labelled by the file stem.
    pub fn load(path: &Path) -> Result<Self, ValidateError> {
        let io = |source| ValidateError::Io {
            path: path.to_owned(),
            source,
        };
        let text = fs::read_to_string(path).map_err(io)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let sidecar_path = Self::sidecar_path(path);
        let sidecar = match fs::read_to_string(&sidecar_path) {
            Ok(s) => serde_json::from_str::<Sidecar>(&s).map_err(|e| ValidateError::Sidecar {
                path: sidecar_path.clone(),
                message: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Sidecar {
                label: None,
                directed: false,
            },
            Err(source) => {
                return Err(ValidateError::Io {
                    path: sidecar_path,
                    source,
                })
            }
        };
        let label = sidecar.label.unwrap_or(stem);
        let pairs = RankedPairList::from_tsv(label.clone(), &text)?;
        Self::new(label, sidecar.directed, pairs)
    }

    pub fn save(&self, path: &Path) -> Result<(), ValidateError> {
        let io = |p: &Path| {
            let p = p.to_owned();
            move |source| ValidateError::Io { path: p, source }
        };
        fs::write(path, self.pairs.to_tsv()).map_err(io(path))?;
        let sidecar = Sidecar {
            label: Some(self.label.clone()),
            directed: self.directed,
        };
        let side = Self::sidecar_path(path);
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n";
        fs::write(&side, json).map_err(io(&side))
    }

    /// The ranking with every undirected pair listed in both directions.
    pub fn directed_pairs(&self) -> RankedPairList {
        if self.directed {
            return self.pairs.clone();
        }
        let both = self
            .pairs
            .pairs()
            .iter()
            .flat_map(|(k, s)| {
                let (a, b) = split_key(k).expect("validated key");
                [(pair_key(a, b), *s), (pair_key(b, a), *s)]
            })
            .collect();
        RankedPairList::new(self.label.clone(), both).expect("expanded keys are unique")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub a: String,
    pub b: String,
    pub keys_a: usize,
    pub keys_b: usize,
    pub common: usize,
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    /// Why the correlation could not be computed.
    pub error: Option<String>,
}

fn correlate_pair(
    a: &RankedPairList,
    b: &RankedPairList,
    test: &PermutationTest,
) -> PairCorrelation {
    let mut out = PairCorrelation {
        a: a.source_label.clone(),
        b: b.source_label.clone(),
        keys_a: a.len(),
        keys_b: b.len(),
        common: 0,
        rho: None,
        p_value: None,
        error: None,
    };
    let result = align_rankings(&[a, b]).and_then(|aligned| {
        out.common = aligned.len();
        spearman(&aligned.ranks[0], &aligned.ranks[1], test)
    });
    match result {
        Ok(Correlation { rho, p_value, .. }) => {
            out.rho = Some(rho);
            out.p_value = Some(p_value);
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// Spearman correlation for every pair of rankings, in input order.
pub fn correlate_rankings(
    lists: &[&RankedPairList],
    test: &PermutationTest,
) -> Vec<PairCorrelation> {
    let mut out = Vec::new();
    for i in 0..lists.len() {
        for j in i + 1..lists.len() {
            out.push(correlate_pair(lists[i], lists[j], test));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub measure: String,
    pub comparisons: Vec<PairCorrelation>,
}

/// Correlates a measure ranking with each external ranking and the externals
/// with each other. Comparisons involving a directed ranking use directed keys,
/// undirected rankings are listed in both directions for them.
pub fn correlate_with_external(
    measure: &ExternalRanking,
    externals: &[ExternalRanking],
    test: &PermutationTest,
) -> Result<CorrelationReport, ValidateError> {
    let all: Vec<&ExternalRanking> = std::iter::once(measure).chain(externals).collect();
    let mut comparisons = Vec::new();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let (x, y) = (all[i], all[j]);
            let pair = if x.directed || y.directed {
                correlate_pair(&x.directed_pairs(), &y.directed_pairs(), test)
            } else {
                correlate_pair(&x.pairs, &y.pairs, test)
            };
            comparisons.push(pair);
        }
    }
    if comparisons.iter().all(|c| c.common == 0) {
        return Err(ValidateError::EmptyIntersection);
    }
    Ok(CorrelationReport {
        measure: measure.label.clone(),
        comparisons,
    })
}

/// Understanding scores as a directed ranking of (observer country, cuisine
/// country) pairs. Own cuisines and same-country pairs are skipped; scores
/// landing on the same pair are averaged.
pub fn understanding_country_ranking(
    understanding: &UnderstandingMatrix,
    snapshot: &CorpusSnapshot,
    label: &str,
) -> Result<ExternalRanking, ValidateError> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (li, language) in understanding.languages().iter().enumerate() {
        let observers = snapshot.language_countries(language);
        for (ci, cuisine) in understanding.cuisines().iter().enumerate() {
            if snapshot.ownership().owns(language, cuisine) {
                continue;
            }
            let (Some(score), Some(c)) = (understanding.get(li, ci), snapshot.cuisine(cuisine))
            else {
                continue;
            };
            for from in &observers {
                for to in &c.country_codes {
                    if from != to {
                        let e = acc.entry(pair_key(from, to)).or_insert((0.0, 0));
                        e.0 += score;
                        e.1 += 1;
                    }
                }
            }
        }
    }
    let pairs = acc
        .into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect();
    ExternalRanking::new(label, true, RankedPairList::new(label, pairs)?)
}

/// Defined off-diagonal similarities keyed `a|b` with `a < b`.
pub fn similarity_ranking(similarity: &SimilarityMatrix, label: &str) -> RankedPairList {
    let pairs = similarity
        .pairs()
        .map(|(a, b, s)| {
            if a < b {
                (pair_key(a, b), s)
            } else {
                (pair_key(b, a), s)
            }
        })
        .collect();
    RankedPairList::new(label, pairs).expect("similarity pairs are unique and finite")
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub const CROSS_MEASURE_LABELS: [&str; 3] = ["similarity", "understanding", "affinity"];

/// Rankings of directed language pairs `l1|l2` for the three measures:
/// similarity between their own cuisines, understanding and bias of `l1`
/// toward the cuisines `l2` owns.
pub fn cross_measure_rankings(
    snapshot: &CorpusSnapshot,
    similarity: &SimilarityMatrix,
    understanding: &UnderstandingMatrix,
    bias: &BiasMatrix,
) -> [RankedPairList; 3] {
    let ownership = snapshot.ownership();
    let mut lists: [Vec<(String, f64)>; 3] = Default::default();
    let codes: Vec<&str> = snapshot
        .languages()
        .iter()
        .map(|l| l.code.as_str())
        .collect();
    for &l1 in &codes {
        for &l2 in &codes {
            if l1 == l2 {
                continue;
            }
            let (Some(own1), Some(own2)) = (ownership.own_cuisines(l1), ownership.own_cuisines(l2))
            else {
                continue;
            };
            let key = pair_key(l1, l2);
            let sim = mean(
                own1.iter()
                    .flat_map(|a| own2.iter().map(move |b| (a, b)))
                    .filter(|(a, b)| a != b)
                    .filter_map(|(a, b)| similarity.score(a, b)),
            );
            let und = mean(own2.iter().filter_map(|c| understanding.score(l1, c)));
            let aff = bias.language_index(l1).and_then(|li| {
                mean(own2.iter().filter_map(|c| {
                    bias.cuisine_index(c)
                        .and_then(|ci| bias.covered_value(li, ci))
                }))
            });
            for (list, value) in lists.iter_mut().zip([sim, und, aff]) {
                if let Some(v) = value {
                    list.push((key.clone(), v));
                }
            }
        }
    }
    let mut it = lists
        .into_iter()
        .zip(CROSS_MEASURE_LABELS)
        .map(|(pairs, label)| {
            RankedPairList::new(label, pairs).expect("language pair keys are unique")
        });
    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMeasureReport {
    pub labels: Vec<String>,
    /// Symmetric matrix, 1 on the diagonal, `None` when undefined.
    pub rho: Vec<Vec<Option<f64>>>,
    pub p_value: Vec<Vec<Option<f64>>>,
    pub common: Vec<Vec<usize>>,
    pub contributed: Vec<usize>,
}

pub fn cross_measure_correlations(
    snapshot: &CorpusSnapshot,
    similarity: &SimilarityMatrix,
    understanding: &UnderstandingMatrix,
    bias: &BiasMatrix,
    test: &PermutationTest,
) -> Result<CrossMeasureReport, ValidateError> {
    let lists = cross_measure_rankings(snapshot, similarity, understanding, bias);
    let n = lists.len();
    let mut rho = vec![vec![None; n]; n];
    let mut p_value = vec![vec![None; n]; n];
    let mut common = vec![vec![0; n]; n];
    for i in 0..n {
        rho[i][i] = Some(1.0);
        common[i][i] = lists[i].len();
        for j in i + 1..n {
            let c = correlate_pair(&lists[i], &lists[j], test);
            for (x, y) in [(i, j), (j, i)] {
                rho[x][y] = c.rho;
                p_value[x][y] = c.p_value;
                common[x][y] = c.common;
            }
        }
    }
    if (0..n).all(|i| (0..n).all(|j| i == j || common[i][j] == 0)) {
        return Err(ValidateError::EmptyIntersection);
    }
    Ok(CrossMeasureReport {
        labels: CROSS_MEASURE_LABELS.iter().map(|s| s.to_string()).collect(),
        rho,
        p_value,
        common,
        contributed: lists.iter().map(|l| l.len()).collect(),
    })
}

/// A judgment task: is the high pair more similar than the low pair?
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrowdTask {
    pub task_id: String,
    pub pair_high: (String, String),
    pub pair_low: (String, String),
}

fn split_owned(key: &str) -> Result<(String, String), ValidateError> {
    split_key(key)
        .map(|(a, b)| (a.to_owned(), b.to_owned()))
        .ok_or_else(|| ValidateError::InvalidKey(key.to_owned()))
}

/// Every combination of the `k` most similar with the `k` least similar pairs,
/// high pairs in rank order, low pairs from the least similar upward.
pub fn generate_crowd_tasks(
    ranking: &RankedPairList,
    k: usize,
) -> Result<Vec<CrowdTask>, ValidateError> {
    if k == 0 {
        return Err(ValidateError::InvalidK);
    }
    let pairs = ranking.pairs();
    if pairs.len() < 2 * k {
        return Err(ValidateError::InsufficientPairs {
            have: pairs.len(),
            need: 2 * k,
        });
    }
    let high: Vec<_> = pairs[..k]
        .iter()
        .map(|(key, _)| split_owned(key))
        .collect::<Result<_, _>>()?;
    let low: Vec<_> = pairs[pairs.len() - k..]
        .iter()
        .rev()
        .map(|(key, _)| split_owned(key))
        .collect::<Result<_, _>>()?;
    let mut tasks = Vec::with_capacity(k * k);
    for h in &high {
        for l in &low {
            tasks.push(CrowdTask {
                task_id: format!("t{:04}", tasks.len() + 1),
                pair_high: h.clone(),
                pair_low: l.clone(),
            });
        }
    }
    Ok(tasks)
}

pub fn crowd_tasks_to_tsv(tasks: &[CrowdTask]) -> String {
    let mut out = String::from("task_id\thigh_a\thigh_b\tlow_a\tlow_b\n");
    for t in tasks {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            t.task_id, t.pair_high.0, t.pair_high.1, t.pair_low.0, t.pair_low.1
        );
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTally {
    pub high_votes: usize,
    pub low_votes: usize,
}

impl TaskTally {
    /// `Some(true)` when the majority picked the high pair, `None` on a tie.
    pub fn majority_agrees(&self) -> Option<bool> {
        match self.high_votes.cmp(&self.low_votes) {
            std::cmp::Ordering::Greater => Some(true),
            std::cmp::Ordering::Less => Some(false),
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// Counts votes per task; a vote is `(task_id, picked_high_pair)`.
pub fn tally<'a>(votes: impl IntoIterator<Item = (&'a str, bool)>) -> BTreeMap<String, TaskTally> {
    let mut out: BTreeMap<String, TaskTally> = BTreeMap::new();
    for (task, high) in votes {
        let t = out.entry(task.to_owned()).or_default();
        if high {
            t.high_votes += 1;
        } else {
            t.low_votes += 1;
        }
    }
    out
}

/// Share of decided tasks whose majority agrees with the ranking.
pub fn agreement_rate(tallies: &BTreeMap<String, TaskTally>) -> Option<f64> {
    let decided: Vec<bool> = tallies
        .values()
        .filter_map(TaskTally::majority_agrees)
        .collect();
    (!decided.is_empty())
        .then(|| decided.iter().filter(|&&b| b).count() as f64 / decided.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(label: &str, pairs: &[(&str, f64)]) -> RankedPairList {
        RankedPairList::new(
            label,
            pairs.iter().map(|(k, s)| (k.to_string(), *s)).collect(),
        )
        .unwrap()
    }

    fn external(label: &str, directed: bool, pairs: &[(&str, f64)]) -> ExternalRanking {
        ExternalRanking::new(label, directed, ranking(label, pairs)).unwrap()
    }

    const KEYS: [&str; 5] = ["AT|DE", "DE|FR", "FR|IT", "ES|PT", "DK|SE"];

    #[test]
    fn identical_and_reversed_externals() {
        let scores: Vec<(&str, f64)> = KEYS
            .iter()
            .enumerate()
            .map(|(i, k)| (*k, i as f64))
            .collect();
        let rev: Vec<(&str, f64)> = KEYS
            .iter()
            .enumerate()
            .map(|(i, k)| (*k, -(i as f64)))
            .collect();
        let wiki = external("wiki", false, &scores);
        let report = correlate_with_external(
            &wiki,
            &[
                external("same", false, &scores),
                external("rev", false, &rev),
            ],
            &PermutationTest {
                permutations: 99,
                seed: 1,
            },
        )
        .unwrap();
        let rhos: Vec<_> = report
            .comparisons
            .iter()
            .map(|c| (c.a.as_str(), c.b.as_str(), c.rho))
            .collect();
        assert_eq!(
            rhos,
            vec![
                ("wiki", "same", Some(1.0)),
                ("wiki", "rev", Some(-1.0)),
                ("same", "rev", Some(-1.0))
            ]
        );
        assert!(report.comparisons.iter().all(|c| c.common == 5));
    }

    #[test]
    fn undirected_is_duplicated_against_directed() {
        let ess = external(
            "ess",
            false,
            &[("DE|AT", 3.0), ("FR|DE", 2.0), ("IT|FR", 1.0)],
        );
        assert_eq!(ess.pairs.pairs()[0].0, "AT|DE");
        let mig = external(
            "migration",
            true,
            &[
                ("AT|DE", 6.0),
                ("DE|AT", 5.0),
                ("DE|FR", 4.0),
                ("FR|DE", 3.0),
                ("FR|IT", 2.0),
                ("IT|FR", 1.0),
            ],
        );
        let r = correlate_with_external(
            &mig,
            &[ess],
            &PermutationTest {
                permutations: 9,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(r.comparisons[0].common, 6);
        assert!(r.comparisons[0].rho.unwrap() > 0.9);
    }

    #[test]
    fn bad_keys_and_directions() {
        let bad = |pairs: &[(&str, f64)], directed| {
            ExternalRanking::new("x", directed, ranking("x", pairs))
        };
        assert!(matches!(
            bad(&[("DE-AT", 1.0)], false),
            Err(ValidateError::InvalidKey(_))
        ));
        assert!(matches!(
            bad(&[("DE|DE", 1.0)], false),
            Err(ValidateError::InvalidKey(_))
        ));
        assert!(matches!(
            bad(&[("de|AT", 1.0)], true),
            Err(ValidateError::InvalidKey(_))
        ));
        assert!(matches!(
            bad(&[("DE|AT", 1.0), ("AT|DE", 2.0)], false),
            Err(ValidateError::InconsistentDirection(_))
        ));
        assert!(bad(&[("DE|AT", 1.0), ("AT|DE", 2.0)], true).is_ok());
    }

    #[test]
    fn disjoint_externals_fail() {
        let a = external(
            "a",
            false,
            &[("AT|DE", 1.0), ("DE|FR", 2.0), ("FR|IT", 3.0)],
        );
        let b = external(
            "b",
            false,
            &[("ES|PT", 1.0), ("DK|SE", 2.0), ("NO|SE", 3.0)],
        );
        let r = correlate_with_external(&a, &[b], &PermutationTest::default());
        assert!(matches!(r, Err(ValidateError::EmptyIntersection)));
    }

    #[test]
    fn ranking_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("migration.tsv");
        let m = external("mig", true, &[("AT|DE", 2.0), ("DE|AT", 1.0)]);
        m.save(&path).unwrap();
        assert_eq!(ExternalRanking::load(&path).unwrap(), m);

        let plain = dir.path().join("ess.tsv");
        fs::write(&plain, "key\tscore\nDE|AT\t0.5\n").unwrap();
        let e = ExternalRanking::load(&plain).unwrap();
        assert_eq!((e.label.as_str(), e.directed), ("ess", false));
        assert_eq!(e.pairs.pairs()[0].0, "AT|DE");
    }

    #[test]
    fn crowd_task_shapes() {
        let pairs: Vec<(String, f64)> = (0..450)
            .map(|i| (format!("c{i:03}|d{i:03}"), -(i as f64)))
            .collect();
        let r = RankedPairList::new("sim", pairs).unwrap();
        let tasks = generate_crowd_tasks(&r, 15).unwrap();
        assert_eq!(tasks.len(), 225);
        assert_eq!(tasks[0].task_id, "t0001");
        assert_eq!(tasks[224].task_id, "t0225");

        let one = generate_crowd_tasks(&r, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].pair_high, ("c000".into(), "d000".into()));
        assert_eq!(one[0].pair_low, ("c449".into(), "d449".into()));

        let small = RankedPairList::new(
            "s",
            (0..20).map(|i| (format!("a|b{i}"), i as f64)).collect(),
        )
        .unwrap();
        assert!(matches!(
            generate_crowd_tasks(&small, 15),
            Err(ValidateError::InsufficientPairs { have: 20, need: 30 })
        ));
        assert!(matches!(
            generate_crowd_tasks(&small, 0),
            Err(ValidateError::InvalidK)
        ));

        let tsv = crowd_tasks_to_tsv(&one);
        assert_eq!(
            tsv,
            "task_id\thigh_a\thigh_b\tlow_a\tlow_b\nt0001\tc000\td000\tc449\td449\n"
        );
    }

    #[test]
    fn tallies() {
        let t = tally([
            ("t1", true),
            ("t1", true),
            ("t1", false),
            ("t2", false),
            ("t3", true),
            ("t3", false),
        ]);
        assert_eq!(t["t1"].majority_agrees(), Some(true));
        assert_eq!(t["t2"].majority_agrees(), Some(false));
        assert_eq!(t["t3"].majority_agrees(), None);
        assert_eq!(agreement_rate(&t), Some(0.5));
        assert_eq!(agreement_rate(&BTreeMap::new()), None);
    }
}
