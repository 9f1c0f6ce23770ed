//! Snapshot directory reader and canonical writer.
//!
//! Layout: `manifest.json` plus tab-separated tables with a header row,
//! `\n` line endings and rows sorted lexicographically by all columns.
//! `articles.tsv` is optional on read; without it, article presence is
//! derived from `concepts.tsv` and `views.tsv`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    AdjacencyMap, ConceptSet, CorpusError, CorpusSnapshot, Cuisine, LanguageEdition, Month,
    OwnershipMap, SnapshotParts, ViewRecord,
};

pub const FORMAT_VERSION: &str = "1";

const MANIFEST: &str = "manifest.json";
const LANGUAGES: &str = "languages.tsv";
const CUISINES: &str = "cuisines.tsv";
const OWNERSHIP: &str = "ownership.tsv";
const CONCEPTS: &str = "concepts.tsv";
const VIEWS: &str = "views.tsv";
const ADJACENCY: &str = "adjacency.tsv";
const ARTICLES: &str = "articles.tsv";

const REQUIRED: [&str; 6] = [LANGUAGES, CUISINES, OWNERSHIP, CONCEPTS, VIEWS, ADJACENCY];

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: String,
    files: Vec<String>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

struct Table<'a> {
    file: &'a str,
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn parse_err(file: &str, line: usize, column: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        file: file.to_owned(),
        line,
        column,
        message: message.into(),
    }
}

fn parse_table<'a>(
    file: &'a str,
    text: &'a str,
    header: &[&str],
) -> Result<Table<'a>, CorpusError> {
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
    let (_, head) = lines
        .next()
        .ok_or_else(|| parse_err(file, 1, 1, "missing header row"))?;
    let got: Vec<&str> = head.split('\t').collect();
    if got != header {
        return Err(parse_err(
            file,
            1,
            1,
            format!("expected header {:?}, found {:?}", header.join("\t"), head),
        ));
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(pos) = line.find('\r') {
            return Err(parse_err(file, n, pos + 1, "carriage return in row"));
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            return Err(parse_err(
                file,
                n,
                fields.len().min(header.len()) + 1,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        rows.push((n, fields));
    }
    Ok(Table { file, rows })
}

fn read_file(dir: &Path, name: &str) -> Result<String, CorpusError> {
    let path = dir.join(name);
    match fs::read_to_string(&path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(CorpusError::MissingFile(path)),
        Err(e) => Err(e.into()),
    }
}

fn nonempty<'a>(
    t: &Table<'_>,
    line: usize,
    col: usize,
    v: &'a str,
) -> Result<&'a str, CorpusError> {
    if v.is_empty() {
        Err(parse_err(t.file, line, col, "empty field"))
    } else {
        Ok(v)
    }
}

fn number<T: std::str::FromStr>(
    t: &Table<'_>,
    line: usize,
    col: usize,
    v: &str,
) -> Result<T, CorpusError> {
    v.parse().map_err(|_| {
        parse_err(
            t.file,
            line,
            col,
            format!("expected a nonnegative integer, found {v:?}"),
        )
    })
}

/// The snapshot tables that do not depend on fetched content.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StaticTables {
    pub languages: Vec<LanguageEdition>,
    pub cuisines: Vec<Cuisine>,
    pub ownership: OwnershipMap,
    pub adjacency: AdjacencyMap,
}

impl StaticTables {
    /// Parses the contents of `languages.tsv`, `cuisines.tsv`,
    /// `ownership.tsv` and `adjacency.tsv`.
    pub fn parse(
        languages: &str,
        cuisines: &str,
        ownership: &str,
        adjacency: &str,
    ) -> Result<Self, CorpusError> {
        let mut out = StaticTables::default();
        let t = parse_table(LANGUAGES, languages, &["code", "name", "size_articles"])?;
        for (n, r) in &t.rows {
            out.languages.push(LanguageEdition {
                code: nonempty(&t, *n, 1, r[0])?.to_owned(),
                name: nonempty(&t, *n, 2, r[1])?.to_owned(),
                size_articles: number(&t, *n, 3, r[2])?,
            });
        }

        let t = parse_table(CUISINES, cuisines, &["id", "name", "country_codes"])?;
        for (n, r) in &t.rows {
            out.cuisines.push(Cuisine {
                id: nonempty(&t, *n, 1, r[0])?.to_owned(),
                name: nonempty(&t, *n, 2, r[1])?.to_owned(),
                country_codes: nonempty(&t, *n, 3, r[2])?
                    .split(',')
                    .map(str::to_owned)
                    .collect(),
            });
        }

        let t = parse_table(OWNERSHIP, ownership, &["language_code", "cuisine_id"])?;
        for (n, r) in &t.rows {
            out.ownership
                .insert(nonempty(&t, *n, 1, r[0])?, nonempty(&t, *n, 2, r[1])?);
        }

        let t = parse_table(ADJACENCY, adjacency, &["country_a", "country_b"])?;
        let mut listed = BTreeSet::new();
        for (n, r) in &t.rows {
            listed.insert((nonempty(&t, *n, 1, r[0])?, nonempty(&t, *n, 2, r[1])?));
        }
        let mut neighbors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for &(a, b) in &listed {
            // Ordered rows denote an undirected pair; a reversed row stands for a
            // single direction and must be mirrored by its ordered counterpart.
            neighbors
                .entry(a.to_owned())
                .or_default()
                .insert(b.to_owned());
            if a < b {
                neighbors
                    .entry(b.to_owned())
                    .or_default()
                    .insert(a.to_owned());
            }
        }
        out.adjacency = AdjacencyMap::from_neighbors(neighbors)?;
        Ok(out)
    }

    /// Reads the four tables from a directory.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let dir = dir.as_ref();
        Self::parse(
            &read_file(dir, LANGUAGES)?,
            &read_file(dir, CUISINES)?,
            &read_file(dir, OWNERSHIP)?,
            &read_file(dir, ADJACENCY)?,
        )
    }
}

/// Reads and validates a snapshot directory.
pub fn load_snapshot(dir: impl AsRef<Path>) -> Result<CorpusSnapshot, CorpusError> {
    let dir = dir.as_ref();
    let manifest_text = read_file(dir, MANIFEST)?;
    let manifest: Manifest = serde_json::from_str(&manifest_text)
        .map_err(|e| parse_err(MANIFEST, e.line(), e.column(), e.to_string()))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(parse_err(
            MANIFEST,
            1,
            1,
            format!("unsupported format version {:?}", manifest.format_version),
        ));
    }
    for f in REQUIRED
        .iter()
        .copied()
        .chain(manifest.files.iter().map(String::as_str))
    {
        if !dir.join(f).is_file() {
            return Err(CorpusError::MissingFile(dir.join(f)));
        }
    }

    let mut parts = SnapshotParts {
        metadata: manifest.metadata,
        ..Default::default()
    };

    let tables = StaticTables::parse(
        &read_file(dir, LANGUAGES)?,
        &read_file(dir, CUISINES)?,
        &read_file(dir, OWNERSHIP)?,
        &read_file(dir, ADJACENCY)?,
    )?;
    parts.languages = tables.languages;
    parts.cuisines = tables.cuisines;
    parts.ownership = tables.ownership;
    parts.adjacency = tables.adjacency;

    let mut articles: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    let has_registry = dir.join(ARTICLES).is_file();
    if has_registry {
        let text = read_file(dir, ARTICLES)?;
        let t = parse_table(ARTICLES, &text, &["language_code", "cuisine_id", "title"])?;
        for (n, r) in &t.rows {
            let key = (
                nonempty(&t, *n, 1, r[0])?.to_owned(),
                nonempty(&t, *n, 2, r[1])?.to_owned(),
            );
            if articles.insert(key.clone(), BTreeSet::new()).is_some() {
                return Err(parse_err(ARTICLES, *n, 1, "duplicate article row"));
            }
            parts
                .titles
                .insert(key, nonempty(&t, *n, 3, r[2])?.to_owned());
        }
    }

    let text = read_file(dir, CONCEPTS)?;
    let t = parse_table(
        CONCEPTS,
        &text,
        &["language_code", "cuisine_id", "concept_id"],
    )?;
    for (n, r) in &t.rows {
        let key = (
            nonempty(&t, *n, 1, r[0])?.to_owned(),
            nonempty(&t, *n, 2, r[1])?.to_owned(),
        );
        let concept = nonempty(&t, *n, 3, r[2])?.to_owned();
        let entry = if has_registry {
            articles
                .get_mut(&key)
                .ok_or_else(|| CorpusError::ReferentialIntegrity {
                    entity: "concepts".into(),
                    key: format!("{}\t{}", key.0, key.1),
                })?
        } else {
            articles.entry(key).or_default()
        };
        if !entry.insert(concept) {
            return Err(parse_err(CONCEPTS, *n, 3, "duplicate concept row"));
        }
    }

    let text = read_file(dir, VIEWS)?;
    let t = parse_table(
        VIEWS,
        &text,
        &["language_code", "cuisine_id", "month", "views"],
    )?;
    for (n, r) in &t.rows {
        let month: Month = r[2]
            .parse()
            .map_err(|e| parse_err(VIEWS, *n, 3, format!("{e}")))?;
        let rec = ViewRecord {
            language: nonempty(&t, *n, 1, r[0])?.to_owned(),
            cuisine: nonempty(&t, *n, 2, r[1])?.to_owned(),
            month,
            views: number(&t, *n, 4, r[3])?,
        };
        if !has_registry {
            articles
                .entry((rec.language.clone(), rec.cuisine.clone()))
                .or_default();
        }
        parts.views.push(rec);
    }

    parts.concept_sets = articles
        .into_iter()
        .map(|((language, cuisine), concepts)| ConceptSet {
            language,
            cuisine,
            concepts,
        })
        .collect();

    CorpusSnapshot::from_parts(parts)
}

fn table(header: &[&str], mut rows: Vec<Vec<String>>) -> String {
    rows.sort();
    let mut out = header.join("\t");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join("\t"));
        out.push('\n');
    }
    out
}

/// Writes `snapshot` to `dir` in canonical form, creating the directory if needed.
pub fn save_snapshot(snapshot: &CorpusSnapshot, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let languages = snapshot
        .languages()
        .iter()
        .map(|l| vec![l.code.clone(), l.name.clone(), l.size_articles.to_string()])
        .collect();
    let cuisines = snapshot
        .cuisines()
        .iter()
        .map(|c| vec![c.id.clone(), c.name.clone(), c.country_codes.join(",")])
        .collect();
    let ownership = snapshot
        .ownership()
        .pairs()
        .map(|(l, c)| vec![l.to_owned(), c.to_owned()])
        .collect();
    let mut articles = Vec::new();
    let mut concepts = Vec::new();
    for cs in snapshot.concept_sets() {
        let title = snapshot
            .article_title(&cs.language, &cs.cuisine)
            .map(str::to_owned)
            .unwrap_or_else(|| format!("{}:{}", cs.language, cs.cuisine));
        articles.push(vec![cs.language.clone(), cs.cuisine.clone(), title]);
        for c in &cs.concepts {
            concepts.push(vec![cs.language.clone(), cs.cuisine.clone(), c.clone()]);
        }
    }
    let views = snapshot
        .views()
        .iter()
        .map(|v| {
            vec![
                v.language.clone(),
                v.cuisine.clone(),
                v.month.to_string(),
                v.views.to_string(),
            ]
        })
        .collect();
    let adjacency = snapshot
        .adjacency()
        .pairs()
        .map(|(a, b)| vec![a.to_owned(), b.to_owned()])
        .collect();

    let files: [(&str, String); 7] = [
        (ADJACENCY, table(&["country_a", "country_b"], adjacency)),
        (
            ARTICLES,
            table(&["language_code", "cuisine_id", "title"], articles),
        ),
        (
            CONCEPTS,
            table(&["language_code", "cuisine_id", "concept_id"], concepts),
        ),
        (CUISINES, table(&["id", "name", "country_codes"], cuisines)),
        (
            LANGUAGES,
            table(&["code", "name", "size_articles"], languages),
        ),
        (
            OWNERSHIP,
            table(&["language_code", "cuisine_id"], ownership),
        ),
        (
            VIEWS,
            table(&["language_code", "cuisine_id", "month", "views"], views),
        ),
    ];
    for (name, body) in &files {
        fs::write(dir.join(name), body)?;
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION.to_owned(),
        files: files.iter().map(|(n, _)| n.to_string()).collect(),
        metadata: snapshot.metadata().clone(),
    };
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let _ = writeln!(body);
    fs::write(dir.join(MANIFEST), body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::{article, cuisine, lang};

    fn sample() -> CorpusSnapshot {
        let mut ownership = OwnershipMap::new();
        ownership.insert("aa", "x");
        ownership.insert("bb", "y");
        let mut metadata = BTreeMap::new();
        metadata.insert("snapshot_date".into(), "2014-06-30".into());
        CorpusSnapshot::from_parts(SnapshotParts {
            languages: vec![lang("aa"), lang("bb")],
            cuisines: vec![cuisine("x", "XX"), cuisine("y", "XY")],
            ownership,
            concept_sets: vec![article("aa", "x", &["Q1", "Q2"]), article("bb", "x", &[])],
            views: vec![ViewRecord {
                language: "aa".into(),
                cuisine: "x".into(),
                month: "2013-05".parse().unwrap(),
                views: 10,
            }],
            adjacency: AdjacencyMap::from_pairs([("XX", "XY")]).unwrap(),
            metadata,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn save_load_round_trip_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        save_snapshot(&sample(), a.path()).unwrap();
        let loaded = load_snapshot(a.path()).unwrap();
        assert!(loaded.has_article("bb", "x"));
        assert!(loaded.concepts("bb", "x").unwrap().is_empty());
        assert!(!loaded.has_article("bb", "y"));
        save_snapshot(&loaded, b.path()).unwrap();
        for f in [
            "manifest.json",
            LANGUAGES,
            CUISINES,
            OWNERSHIP,
            CONCEPTS,
            VIEWS,
            ADJACENCY,
            ARTICLES,
        ] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn missing_views_file() {
        let d = tempfile::tempdir().unwrap();
        save_snapshot(&sample(), d.path()).unwrap();
        fs::remove_file(d.path().join(VIEWS)).unwrap();
        match load_snapshot(d.path()) {
            Err(CorpusError::MissingFile(p)) => assert!(p.ends_with(VIEWS)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn asymmetric_adjacency_row() {
        let d = tempfile::tempdir().unwrap();
        save_snapshot(&sample(), d.path()).unwrap();
        fs::write(d.path().join(ADJACENCY), "country_a\tcountry_b\nXY\tXX\n").unwrap();
        assert!(matches!(
            load_snapshot(d.path()),
            Err(CorpusError::InvariantViolation(_))
        ));
        // mirrored rows are accepted
        fs::write(
            d.path().join(ADJACENCY),
            "country_a\tcountry_b\nXX\tXY\nXY\tXX\n",
        )
        .unwrap();
        assert!(load_snapshot(d.path()).is_ok());
    }

    #[test]
    fn parse_errors_carry_position() {
        let d = tempfile::tempdir().unwrap();
        save_snapshot(&sample(), d.path()).unwrap();
        fs::write(
            d.path().join(VIEWS),
            "language_code\tcuisine_id\tmonth\tviews\naa\tx\t2013-13\t5\n",
        )
        .unwrap();
        match load_snapshot(d.path()) {
            Err(CorpusError::Parse {
                file, line, column, ..
            }) => {
                assert_eq!((file.as_str(), line, column), (VIEWS, 2, 3));
            }
            other => panic!("{other:?}"),
        }
        fs::write(
            d.path().join(VIEWS),
            "language_code\tcuisine_id\tmonth\tviews\naa\tx\t2013-05\t-1\n",
        )
        .unwrap();
        assert!(matches!(
            load_snapshot(d.path()),
            Err(CorpusError::Parse {
                line: 2,
                column: 4,
                ..
            })
        ));
        fs::write(d.path().join(VIEWS), "lang\tcuisine\n").unwrap();
        assert!(matches!(
            load_snapshot(d.path()),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn concepts_for_unregistered_article() {
        let d = tempfile::tempdir().unwrap();
        save_snapshot(&sample(), d.path()).unwrap();
        fs::write(
            d.path().join(CONCEPTS),
            "language_code\tcuisine_id\tconcept_id\nbb\ty\tQ9\n",
        )
        .unwrap();
        assert!(matches!(
            load_snapshot(d.path()),
            Err(CorpusError::ReferentialIntegrity { .. })
        ));
    }

    #[test]
    fn registry_is_optional() {
        let d = tempfile::tempdir().unwrap();
        save_snapshot(&sample(), d.path()).unwrap();
        fs::remove_file(d.path().join(ARTICLES)).unwrap();
        let m = fs::read_to_string(d.path().join(MANIFEST))
            .unwrap()
            .replace("\n    \"articles.tsv\",", "");
        fs::write(d.path().join(MANIFEST), m).unwrap();
        let s = load_snapshot(d.path()).unwrap();
        assert!(s.has_article("aa", "x"));
        // without the registry an article with no links cannot be represented
        assert!(!s.has_article("bb", "x"));
    }
}
