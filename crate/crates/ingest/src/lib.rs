//! Fetches seed-article outlinks (resolved to language-independent concept
//! identifiers) and monthly view counts from wiki APIs, and writes corpus
//! snapshots. All network access goes through a [`Transport`], so a
//! directory of recorded responses can stand in for the live services.

mod build;
mod fetch;
mod static_data;
pub mod transport;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use ccrm_core::corpus::CorpusError;
use serde::{Deserialize, Serialize};

pub use build::{
    build_snapshot, BuildConfig, BuildOutcome, SeedFailure, DEFAULT_FAILURE_THRESHOLD,
};
pub use fetch::{fetch_outlinks, fetch_views, Outlinks};
pub use static_data::builtin_static_tables;
pub use transport::{
    HttpResponse, LiveTransport, PacedTransport, RecordingTransport, ReplayTransport, Transport,
    TransportError,
};

pub const DEFAULT_WIKI_API: &str = "https://{lang}.wikipedia.org/w/api.php";
pub const DEFAULT_VIEWS_API: &str =
    "https://wikimedia.org/api/rest_v1/metrics/pageviews/per-article/\
{lang}.wikipedia/all-access/user/{title}/monthly/{start}/{end}";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("network error for {url}: {message}")]
    Network { url: String, message: String },
    #[error("article not found: {language}:{title}")]
    ArticleNotFound { language: String, title: String },
    #[error("rate limited at {url}{}", retry_after_ms.map(|ms| format!(" (retry after {ms} ms)")).unwrap_or_default())]
    RateLimited {
        url: String,
        retry_after_ms: Option<u64>,
    },
    #[error("seed file line {line}: {message}")]
    InvalidSeed { line: usize, message: String },
    #[error("invalid fetch policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid endpoint template: {0}")]
    InvalidEndpoint(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{failed} of {total} seeds failed")]
    BuildFailed {
        failed: usize,
        total: usize,
        failures: Vec<SeedFailure>,
    },
}

/// One seed article: the page describing a cuisine in a language edition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeedEntry {
    pub language: String,
    pub cuisine: String,
    pub article_title: String,
    pub article_url: String,
}

const SEED_HEADER: [&str; 4] = ["language", "cuisine_id", "article_title", "article_url"];

/// Parses a seed TSV: `language, cuisine_id, article_title, article_url`.
/// The header row is optional; blank lines are skipped.
pub fn parse_seeds(text: &str) -> Result<Vec<SeedEntry>, IngestError> {
    let mut seeds: Vec<SeedEntry> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let bad = |message: String| IngestError::InvalidSeed { line: n, message };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if n == 1 && fields == SEED_HEADER {
            continue;
        }
        let [language, cuisine, title, link] = fields[..] else {
            return Err(bad(format!(
                "expected 4 tab-separated fields, found {}",
                fields.len()
            )));
        };
        if language.is_empty()
            || !language
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b == b'-')
        {
            return Err(bad(format!("invalid language code {language:?}")));
        }
        if cuisine.is_empty() {
            return Err(bad("empty cuisine id".into()));
        }
        if title.trim().is_empty() {
            return Err(bad("empty article title".into()));
        }
        match url::Url::parse(link) {
            Ok(u) if matches!(u.scheme(), "http" | "https") && u.host_str().is_some() => {}
            _ => return Err(bad(format!("malformed article URL {link:?}"))),
        }
        if seeds
            .iter()
            .any(|s| s.language == language && s.cuisine == cuisine)
        {
            return Err(bad(format!("duplicate seed for {language}/{cuisine}")));
        }
        seeds.push(SeedEntry {
            language: language.to_owned(),
            cuisine: cuisine.to_owned(),
            article_title: title.to_owned(),
            article_url: link.to_owned(),
        });
    }
    Ok(seeds)
}

pub fn read_seeds(path: impl AsRef<Path>) -> Result<Vec<SeedEntry>, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_seeds(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchPolicy {
    pub max_concurrent_requests: usize,
    /// Minimum spacing between requests to one host.
    pub min_request_interval_ms: u64,
    /// Extra attempts after the first.
    pub retries: u32,
    pub backoff_base_ms: u64,
    pub timeout_ms: u64,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            max_concurrent_requests: 4,
            min_request_interval_ms: 100,
            retries: 3,
            backoff_base_ms: 500,
            timeout_ms: 30_000,
        }
    }
}

impl FetchPolicy {
    pub const MAX_CONCURRENT: usize = 16;
    pub const MAX_RETRIES: u32 = 10;
    pub const MAX_INTERVAL_MS: u64 = 60_000;
    pub const MAX_BACKOFF_MS: u64 = 60_000;
    pub const MAX_TIMEOUT_MS: u64 = 600_000;

    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::InvalidPolicy(m));
        if !(1..=Self::MAX_CONCURRENT).contains(&self.max_concurrent_requests) {
            return bad(format!(
                "max_concurrent_requests must be in 1..={}",
                Self::MAX_CONCURRENT
            ));
        }
        if self.min_request_interval_ms > Self::MAX_INTERVAL_MS {
            return bad(format!(
                "min_request_interval_ms must be at most {}",
                Self::MAX_INTERVAL_MS
            ));
        }
        if self.retries > Self::MAX_RETRIES {
            return bad(format!("retries must be at most {}", Self::MAX_RETRIES));
        }
        if !(1..=Self::MAX_BACKOFF_MS).contains(&self.backoff_base_ms) {
            return bad(format!(
                "backoff_base_ms must be in 1..={}",
                Self::MAX_BACKOFF_MS
            ));
        }
        if !(1..=Self::MAX_TIMEOUT_MS).contains(&self.timeout_ms) {
            return bad(format!(
                "timeout_ms must be in 1..={}",
                Self::MAX_TIMEOUT_MS
            ));
        }
        Ok(())
    }

    pub fn min_interval(&self) -> Duration {
        Duration::from_millis(self.min_request_interval_ms)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

/// URL templates for the wiki API (`{lang}`) and the monthly pageview
/// endpoint (`{lang}`, `{title}`, `{start}`, `{end}`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoints {
    pub wiki_api: String,
    pub views_api: String,
}

impl Default for Endpoints {
    fn default() -> Self {
        Endpoints {
            wiki_api: DEFAULT_WIKI_API.to_owned(),
            views_api: DEFAULT_VIEWS_API.to_owned(),
        }
    }
}

impl Endpoints {
    /// Defaults overridden by `CCRM_WIKI_API` and `CCRM_VIEWS_API`.
    pub fn from_env() -> Self {
        let mut e = Endpoints::default();
        if let Ok(v) = std::env::var("CCRM_WIKI_API") {
            e.wiki_api = v;
        }
        if let Ok(v) = std::env::var("CCRM_VIEWS_API") {
            e.views_api = v;
        }
        e
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        for (name, template, required) in [
            ("wiki API", &self.wiki_api, &[][..]),
            (
                "views API",
                &self.views_api,
                &["{title}", "{start}", "{end}"][..],
            ),
        ] {
            if let Some(p) = required.iter().find(|p| !template.contains(**p)) {
                return Err(IngestError::InvalidEndpoint(format!(
                    "{name} template lacks {p}"
                )));
            }
            let probe = template
                .replace("{lang}", "xx")
                .replace("{title}", "t")
                .replace("{start}", "2000010100")
                .replace("{end}", "2000013100");
            if url::Url::parse(&probe).is_err() {
                return Err(IngestError::InvalidEndpoint(format!(
                    "{name} template {template:?} is not a URL"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_parse_with_and_without_header() {
        let body =
            "fr\tfrench\tCuisine française\thttps://fr.wikipedia.org/wiki/Cuisine_fran%C3%A7aise\n";
        let a = parse_seeds(body).unwrap();
        let b = parse_seeds(&format!("{}\n\n{body}", SEED_HEADER.join("\t"))).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].article_title, "Cuisine française");
    }

    #[test]
    fn seeds_reject_bad_rows() {
        let line = |l: &str, c: &str, t: &str, u: &str| format!("{l}\t{c}\t{t}\t{u}\n");
        let ok = "https://fr.wikipedia.org/wiki/X";
        assert!(parse_seeds(&line("fr", "french", " ", ok)).is_err());
        assert!(parse_seeds(&line("fr", "french", "X", "not a url")).is_err());
        assert!(parse_seeds(&line("FR", "french", "X", ok)).is_err());
        assert!(parse_seeds("fr\tfrench\tX\n").is_err());
        let dup = line("fr", "french", "X", ok).repeat(2);
        assert!(matches!(
            parse_seeds(&dup),
            Err(IngestError::InvalidSeed { line: 2, .. })
        ));
    }

    #[test]
    fn policy_bounds() {
        assert!(FetchPolicy::default().validate().is_ok());
        let p = |f: fn(&mut FetchPolicy)| {
            let mut p = FetchPolicy::default();
            f(&mut p);
            p.validate()
        };
        assert!(p(|p| p.max_concurrent_requests = 17).is_err());
        assert!(p(|p| p.max_concurrent_requests = 0).is_err());
        assert!(p(|p| p.backoff_base_ms = 0).is_err());
        assert!(p(|p| p.timeout_ms = 0).is_err());
        assert!(p(|p| p.retries = 11).is_err());
        assert!(p(|p| p.min_request_interval_ms = 0).is_ok());
    }

    #[test]
    fn endpoint_templates() {
        assert!(Endpoints::default().validate().is_ok());
        let e = Endpoints {
            views_api: "https://x.example/{title}".into(),
            ..Default::default()
        };
        assert!(e.validate().is_err());
    }
}
