//! Snapshot assembly from seed fetches plus static tables.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ccrm_core::corpus::{
    load_snapshot, save_snapshot, ConceptSet, CorpusSnapshot, MonthRange, OwnershipMap,
    SnapshotParts, StaticTables, ViewRecord,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fetch::{fetch_outlinks, fetch_views};
use crate::transport::{PacedTransport, Transport};
use crate::{Endpoints, FetchPolicy, IngestError, SeedEntry};

pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub months: MonthRange,
    pub policy: FetchPolicy,
    pub endpoints: Endpoints,
    pub static_tables: StaticTables,
    /// The build fails when the failed share of seeds exceeds this.
    pub failure_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub language: String,
    pub cuisine: String,
    pub title: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub snapshot: CorpusSnapshot,
    pub failures: Vec<SeedFailure>,
}

struct Fetched {
    concepts: ConceptSet,
    title: String,
    views: Vec<ViewRecord>,
}

fn fetch_seed(
    seed: &SeedEntry,
    config: &BuildConfig,
    transport: &dyn Transport,
) -> Result<Fetched, IngestError> {
    let links = fetch_outlinks(seed, &config.policy, &config.endpoints, transport)?;
    let resolved = SeedEntry {
        article_title: links.resolved_title.clone(),
        ..seed.clone()
    };
    let views = fetch_views(
        &resolved,
        config.months,
        &config.policy,
        &config.endpoints,
        transport,
    )?;
    Ok(Fetched {
        concepts: links.concepts,
        title: links.resolved_title,
        views,
    })
}

fn one_line(s: &str) -> String {
    s.split(['\n', '\r', '\t']).collect::<Vec<_>>().join(" ")
}

/// Fetches every seed, writes the snapshot to `out` and returns it as
/// loaded back from disk.
///
/// The snapshot holds the seeded languages, the seeded cuisines plus every
/// cuisine those languages own, and the full adjacency table. Per-seed
/// failures are listed in the manifest metadata.
pub fn build_snapshot(
    seeds: &[SeedEntry],
    config: &BuildConfig,
    transport: &dyn Transport,
    out: &Path,
) -> Result<BuildOutcome, IngestError> {
    config.policy.validate()?;
    config.endpoints.validate()?;
    if seeds.is_empty() {
        return Err(IngestError::InvalidSeed {
            line: 0,
            message: "no seeds".into(),
        });
    }
    let tables = &config.static_tables;
    for (i, s) in seeds.iter().enumerate() {
        let bad = |what: &str, key: &str| IngestError::InvalidSeed {
            line: i + 1,
            message: format!("unknown {what} {key:?}"),
        };
        if !tables.languages.iter().any(|l| l.code == s.language) {
            return Err(bad("language", &s.language));
        }
        if !tables.cuisines.iter().any(|c| c.id == s.cuisine) {
            return Err(bad("cuisine", &s.cuisine));
        }
    }

    let mut seeds = seeds.to_vec();
    seeds.sort();
    let paced = PacedTransport::new(transport, config.policy.min_interval());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.policy.max_concurrent_requests)
        .build()
        .map_err(|e| IngestError::InvalidPolicy(e.to_string()))?;
    let results: Vec<Result<Fetched, IngestError>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|s| fetch_seed(s, config, &paced))
            .collect()
    });

    let mut failures = Vec::new();
    let mut fetched = Vec::new();
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok(f) => fetched.push(f),
            Err(e) => {
                log::warn!("seed {}/{} failed: {e}", seed.language, seed.cuisine);
                failures.push(SeedFailure {
                    language: seed.language.clone(),
                    cuisine: seed.cuisine.clone(),
                    title: seed.article_title.clone(),
                    error: one_line(&e.to_string()),
                });
            }
        }
    }
    if failures.len() as f64 > config.failure_threshold * seeds.len() as f64 {
        return Err(IngestError::BuildFailed {
            failed: failures.len(),
            total: seeds.len(),
            failures,
        });
    }

    let languages: BTreeSet<&str> = seeds.iter().map(|s| s.language.as_str()).collect();
    let mut ownership = OwnershipMap::new();
    let mut cuisines: BTreeSet<&str> = seeds.iter().map(|s| s.cuisine.as_str()).collect();
    for (l, c) in tables
        .ownership
        .pairs()
        .filter(|(l, _)| languages.contains(l))
    {
        ownership.insert(l, c);
        cuisines.insert(c);
    }

    let mut metadata = BTreeMap::from([
        ("source".to_owned(), "ingest".to_owned()),
        ("months".to_owned(), config.months.to_string()),
        ("seeds".to_owned(), seeds.len().to_string()),
        ("failed_seeds".to_owned(), failures.len().to_string()),
    ]);
    for f in &failures {
        metadata.insert(
            format!("failed:{}/{}", f.language, f.cuisine),
            f.error.clone(),
        );
    }

    let mut parts = SnapshotParts {
        languages: tables
            .languages
            .iter()
            .filter(|l| languages.contains(l.code.as_str()))
            .cloned()
            .collect(),
        cuisines: tables
            .cuisines
            .iter()
            .filter(|c| cuisines.contains(c.id.as_str()))
            .cloned()
            .collect(),
        ownership,
        adjacency: tables.adjacency.clone(),
        metadata,
        ..Default::default()
    };
    for f in fetched {
        parts.titles.insert(
            (f.concepts.language.clone(), f.concepts.cuisine.clone()),
            f.title,
        );
        parts.views.extend(f.views);
        parts.concept_sets.push(f.concepts);
    }
    let snapshot = CorpusSnapshot::from_parts(parts)?;
    save_snapshot(&snapshot, out)?;
    Ok(BuildOutcome {
        snapshot: load_snapshot(out)?,
        failures,
    })
}
