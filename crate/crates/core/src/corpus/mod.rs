//! Domain data model: language editions, cuisines, per-article concept sets,
//! monthly view counts, ownership and country adjacency.
//!
//! A [`CorpusSnapshot`] is validated once on construction and immutable
//! afterwards. Missing articles are represented by absence; a present article
//! without outgoing links has an empty concept set.

mod attention;
mod io;
mod month;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

pub use attention::{AttentionMatrix, AttentionSource};
pub use io::{load_snapshot, save_snapshot, StaticTables, FORMAT_VERSION};
pub use month::{Month, MonthParseError, MonthRange};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dangling reference in {entity}: {key}")]
    ReferentialIntegrity { entity: String, key: String },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("month range {0} selects no view data")]
    EmptyRange(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn violation(msg: impl Into<String>) -> CorpusError {
    CorpusError::InvariantViolation(msg.into())
}

fn dangling(entity: &str, key: impl Into<String>) -> CorpusError {
    CorpusError::ReferentialIntegrity {
        entity: entity.to_owned(),
        key: key.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageEdition {
    pub code: String,
    pub name: String,
    pub size_articles: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cuisine {
    pub id: String,
    pub name: String,
    pub country_codes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptSet {
    pub language: String,
    pub cuisine: String,
    pub concepts: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewRecord {
    pub language: String,
    pub cuisine: String,
    pub month: Month,
    pub views: u64,
}

/// Which cuisines each language edition considers its own.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OwnershipMap {
    own: BTreeMap<String, BTreeSet<String>>,
}

impl OwnershipMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, language: impl Into<String>, cuisine: impl Into<String>) {
        self.own
            .entry(language.into())
            .or_default()
            .insert(cuisine.into());
    }

    pub fn own_cuisines(&self, language: &str) -> Option<&BTreeSet<String>> {
        self.own.get(language)
    }

    pub fn owns(&self, language: &str, cuisine: &str) -> bool {
        self.own.get(language).is_some_and(|s| s.contains(cuisine))
    }

    /// Languages that list `cuisine` among their own, in code order.
    pub fn owners_of<'a>(&'a self, cuisine: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.own
            .iter()
            .filter(move |(_, set)| set.contains(cuisine))
            .map(|(l, _)| l.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.own.iter().map(|(l, s)| (l.as_str(), s))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.own
            .iter()
            .flat_map(|(l, s)| s.iter().map(move |c| (l.as_str(), c.as_str())))
    }
}

/// Symmetric country neighbour relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdjacencyMap {
    neighbors: BTreeMap<String, BTreeSet<String>>,
}

impl AdjacencyMap {
    /// Builds the relation from undirected pairs.
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, CorpusError> {
        let mut neighbors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (a, b) in pairs {
            neighbors
                .entry(a.to_owned())
                .or_default()
                .insert(b.to_owned());
            neighbors
                .entry(b.to_owned())
                .or_default()
                .insert(a.to_owned());
        }
        Self::from_neighbors(neighbors)
    }

    /// Takes a directed neighbour map and checks that it is symmetric and irreflexive.
    pub fn from_neighbors(
        neighbors: BTreeMap<String, BTreeSet<String>>,
    ) -> Result<Self, CorpusError> {
        for (a, set) in &neighbors {
            check_country_code(a)?;
            for b in set {
                if a == b {
                    return Err(violation(format!("country {a} is its own neighbor")));
                }
                if !neighbors.get(b).is_some_and(|s| s.contains(a)) {
                    return Err(violation(format!(
                        "asymmetric adjacency: {a} -> {b} listed without {b} -> {a}"
                    )));
                }
            }
        }
        Ok(AdjacencyMap { neighbors })
    }

    pub fn are_neighbors(&self, a: &str, b: &str) -> bool {
        self.neighbors.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn neighbors_of(&self, country: &str) -> impl Iterator<Item = &str> {
        self.neighbors
            .get(country)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    /// Each undirected pair once, `a < b`, in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.neighbors.iter().flat_map(|(a, set)| {
            set.iter()
                .filter(move |b| a.as_str() < b.as_str())
                .map(move |b| (a.as_str(), b.as_str()))
        })
    }

    pub fn countries(&self) -> impl Iterator<Item = &str> {
        self.neighbors.keys().map(String::as_str)
    }
}

/// Unvalidated snapshot contents, the input to [`CorpusSnapshot::from_parts`].
#[derive(Debug, Clone, Default)]
pub struct SnapshotParts {
    pub languages: Vec<LanguageEdition>,
    pub cuisines: Vec<Cuisine>,
    pub ownership: OwnershipMap,
    /// One entry per present article; an empty set marks a present article without links.
    pub concept_sets: Vec<ConceptSet>,
    /// Optional article titles keyed by (language, cuisine).
    pub titles: BTreeMap<(String, String), String>,
    pub views: Vec<ViewRecord>,
    pub adjacency: AdjacencyMap,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct CorpusSnapshot {
    languages: Vec<LanguageEdition>,
    cuisines: Vec<Cuisine>,
    ownership: OwnershipMap,
    articles: BTreeMap<(usize, usize), ConceptSet>,
    titles: BTreeMap<(String, String), String>,
    views: Vec<ViewRecord>,
    adjacency: AdjacencyMap,
    metadata: BTreeMap<String, String>,
    lang_index: BTreeMap<String, usize>,
    cuisine_index: BTreeMap<String, usize>,
}

fn check_language_code(code: &str) -> Result<(), CorpusError> {
    let (base, variant) = match code.split_once('-') {
        Some((b, v)) => (b, Some(v)),
        None => (code, None),
    };
    let base_ok = (2..=3).contains(&base.len()) && base.bytes().all(|c| c.is_ascii_lowercase());
    let variant_ok =
        variant.is_none_or(|v| !v.is_empty() && v.bytes().all(|c| c.is_ascii_lowercase()));
    if base_ok && variant_ok {
        Ok(())
    } else {
        Err(violation(format!("invalid language code {code:?}")))
    }
}

fn check_country_code(code: &str) -> Result<(), CorpusError> {
    if code.len() == 2 && code.bytes().all(|c| c.is_ascii_uppercase()) {
        Ok(())
    } else {
        Err(violation(format!("invalid country code {code:?}")))
    }
}

fn check_field(what: &str, value: &str) -> Result<(), CorpusError> {
    if value.is_empty() {
        return Err(violation(format!("{what} is empty")));
    }
    if value.contains(['\t', '\n', '\r']) {
        return Err(violation(format!(
            "{what} {value:?} contains a tab or newline"
        )));
    }
    Ok(())
}

impl CorpusSnapshot {
    /// Validates and canonicalizes snapshot contents.
    pub fn from_parts(parts: SnapshotParts) -> Result<Self, CorpusError> {
        let SnapshotParts {
            mut languages,
            mut cuisines,
            ownership,
            concept_sets,
            titles,
            mut views,
            adjacency,
            metadata,
        } = parts;

        languages.sort_by(|a, b| a.code.cmp(&b.code));
        let mut lang_index = BTreeMap::new();
        for (i, l) in languages.iter().enumerate() {
            check_language_code(&l.code)?;
            check_field("language name", &l.name)?;
            if lang_index.insert(l.code.clone(), i).is_some() {
                return Err(violation(format!("duplicate language code {}", l.code)));
            }
        }

        cuisines.sort_by(|a, b| a.id.cmp(&b.id));
        let mut cuisine_index = BTreeMap::new();
        for (i, c) in cuisines.iter_mut().enumerate() {
            check_field("cuisine id", &c.id)?;
            check_field("cuisine name", &c.name)?;
            if c.id.contains(',') {
                return Err(violation(format!("cuisine id {:?} contains a comma", c.id)));
            }
            if c.country_codes.is_empty() {
                return Err(violation(format!("cuisine {} has no country codes", c.id)));
            }
            for cc in &c.country_codes {
                check_country_code(cc)?;
            }
            c.country_codes.sort();
            c.country_codes.dedup();
            if cuisine_index.insert(c.id.clone(), i).is_some() {
                return Err(violation(format!("duplicate cuisine id {}", c.id)));
            }
        }

        for (l, set) in ownership.iter() {
            if !lang_index.contains_key(l) {
                return Err(dangling("ownership", l));
            }
            for c in set {
                if !cuisine_index.contains_key(c) {
                    return Err(dangling("ownership", format!("{l}\t{c}")));
                }
            }
        }
        for l in &languages {
            if ownership
                .own_cuisines(&l.code)
                .is_none_or(BTreeSet::is_empty)
            {
                return Err(violation(format!("language {} owns no cuisine", l.code)));
            }
        }

        let mut articles = BTreeMap::new();
        for cs in concept_sets {
            let li = *lang_index
                .get(&cs.language)
                .ok_or_else(|| dangling("concepts", &cs.language))?;
            let ci = *cuisine_index
                .get(&cs.cuisine)
                .ok_or_else(|| dangling("concepts", &cs.cuisine))?;
            for concept in &cs.concepts {
                check_field("concept id", concept)?;
            }
            let key = format!("{}\t{}", cs.language, cs.cuisine);
            if articles.insert((li, ci), cs).is_some() {
                return Err(violation(format!("duplicate article {key}")));
            }
        }
        for ((l, c), title) in &titles {
            let li = lang_index.get(l).ok_or_else(|| dangling("articles", l))?;
            let ci = cuisine_index
                .get(c)
                .ok_or_else(|| dangling("articles", c))?;
            check_field("article title", title)?;
            if !articles.contains_key(&(*li, *ci)) {
                return Err(dangling("articles", format!("{l}\t{c}")));
            }
        }

        views.sort_by(|a, b| {
            (&a.language, &a.cuisine, a.month).cmp(&(&b.language, &b.cuisine, b.month))
        });
        for w in views.windows(2) {
            if (&w[0].language, &w[0].cuisine, w[0].month)
                == (&w[1].language, &w[1].cuisine, w[1].month)
            {
                return Err(violation(format!(
                    "duplicate view record {}\t{}\t{}",
                    w[0].language, w[0].cuisine, w[0].month
                )));
            }
        }
        for v in &views {
            let li = lang_index
                .get(&v.language)
                .ok_or_else(|| dangling("views", &v.language))?;
            let ci = cuisine_index
                .get(&v.cuisine)
                .ok_or_else(|| dangling("views", &v.cuisine))?;
            if !articles.contains_key(&(*li, *ci)) {
                return Err(dangling("views", format!("{}\t{}", v.language, v.cuisine)));
            }
        }

        for (k, v) in &metadata {
            check_field("metadata key", k)?;
            if v.contains(['\n', '\r']) {
                return Err(violation(format!(
                    "metadata value for {k} contains a newline"
                )));
            }
        }

        Ok(CorpusSnapshot {
            languages,
            cuisines,
            ownership,
            articles,
            titles,
            views,
            adjacency,
            metadata,
            lang_index,
            cuisine_index,
        })
    }

    pub fn languages(&self) -> &[LanguageEdition] {
        &self.languages
    }

    pub fn cuisines(&self) -> &[Cuisine] {
        &self.cuisines
    }

    pub fn ownership(&self) -> &OwnershipMap {
        &self.ownership
    }

    pub fn adjacency(&self) -> &AdjacencyMap {
        &self.adjacency
    }

    pub fn views(&self) -> &[ViewRecord] {
        &self.views
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn language_index(&self, code: &str) -> Option<usize> {
        self.lang_index.get(code).copied()
    }

    pub fn cuisine_index(&self, id: &str) -> Option<usize> {
        self.cuisine_index.get(id).copied()
    }

    pub fn cuisine(&self, id: &str) -> Option<&Cuisine> {
        self.cuisine_index(id).map(|i| &self.cuisines[i])
    }

    /// Concept set of the `language` article about `cuisine`, `None` when the article is absent.
    pub fn concepts(&self, language: &str, cuisine: &str) -> Option<&BTreeSet<String>> {
        let li = self.language_index(language)?;
        let ci = self.cuisine_index(cuisine)?;
        self.concepts_at(li, ci)
    }

    pub fn concepts_at(&self, language: usize, cuisine: usize) -> Option<&BTreeSet<String>> {
        self.articles
            .get(&(language, cuisine))
            .map(|cs| &cs.concepts)
    }

    pub fn has_article(&self, language: &str, cuisine: &str) -> bool {
        self.concepts(language, cuisine).is_some()
    }

    /// All present articles in (language, cuisine) order.
    pub fn concept_sets(&self) -> impl Iterator<Item = &ConceptSet> {
        self.articles.values()
    }

    pub fn article_title(&self, language: &str, cuisine: &str) -> Option<&str> {
        self.titles
            .get(&(language.to_owned(), cuisine.to_owned()))
            .map(String::as_str)
    }

    /// Partition of all cuisines into the language's own and other cuisines.
    pub fn own_and_other(&self, language: &str) -> (Vec<&str>, Vec<&str>) {
        self.cuisines
            .iter()
            .map(|c| c.id.as_str())
            .partition(|c| self.ownership.owns(language, c))
    }

    /// Countries a language is associated with, via the cuisines it owns.
    pub fn language_countries(&self, language: &str) -> BTreeSet<&str> {
        self.ownership
            .own_cuisines(language)
            .into_iter()
            .flatten()
            .filter_map(|c| self.cuisine(c))
            .flat_map(|c| c.country_codes.iter().map(String::as_str))
            .collect()
    }

    pub fn into_parts(self) -> SnapshotParts {
        SnapshotParts {
            languages: self.languages,
            cuisines: self.cuisines,
            ownership: self.ownership,
            concept_sets: self.articles.into_values().collect(),
            titles: self.titles,
            views: self.views,
            adjacency: self.adjacency,
            metadata: self.metadata,
        }
    }
}
