//! Outlink and pageview retrieval with retries.

use std::collections::{BTreeMap, BTreeSet};
use std::thread;
use std::time::Duration;

use ccrm_core::corpus::{ConceptSet, Month, MonthRange, ViewRecord};
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::Deserialize;

use crate::transport::{HttpResponse, Transport};
use crate::{Endpoints, FetchPolicy, IngestError, SeedEntry};

/// Characters left unescaped in a REST path segment.
const PATH_SEGMENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

/// Upper bound on continuation requests for one link listing.
const MAX_CONTINUATIONS: usize = 1000;

fn network(url: &str, message: impl Into<String>) -> IngestError {
    IngestError::Network {
        url: url.to_owned(),
        message: message.into(),
    }
}

fn retry_after(response: &HttpResponse) -> Option<Duration> {
    response
        .header("retry-after")?
        .trim()
        .parse::<u64>()
        .ok()
        .map(Duration::from_secs)
}

/// Issues a GET with up to `policy.retries` retries on transport errors,
/// 5xx and 429. Other statuses are returned to the caller.
pub(crate) fn get_with_retry(
    transport: &dyn Transport,
    url: &str,
    policy: &FetchPolicy,
) -> Result<HttpResponse, IngestError> {
    let mut attempt = 0;
    loop {
        let (err, wait_at_least) = match transport.get(url) {
            Err(e) => (network(url, e.message), None),
            Ok(r) if r.status == 429 => {
                let wait = retry_after(&r);
                let retry_after_ms = wait.map(|d| d.as_millis() as u64);
                (
                    IngestError::RateLimited {
                        url: url.to_owned(),
                        retry_after_ms,
                    },
                    wait,
                )
            }
            Ok(r) if r.status >= 500 => (network(url, format!("HTTP {}", r.status)), None),
            Ok(r) => return Ok(r),
        };
        if attempt >= policy.retries {
            return Err(err);
        }
        let backoff =
            Duration::from_millis(policy.backoff_base_ms.saturating_mul(1 << attempt.min(20)));
        let wait = wait_at_least.map_or(backoff, |w| w.max(backoff));
        log::debug!("retrying {url} in {wait:?} after: {err}");
        thread::sleep(wait);
        attempt += 1;
    }
}

fn json<'a, T: Deserialize<'a>>(url: &str, body: &'a str) -> Result<T, IngestError> {
    serde_json::from_str(body).map_err(|e| network(url, format!("invalid payload: {e}")))
}

#[derive(Deserialize)]
struct ApiResponse {
    #[serde(default)]
    query: Option<Query>,
    #[serde(default, rename = "continue")]
    continuation: Option<BTreeMap<String, serde_json::Value>>,
    #[serde(default)]
    error: Option<ApiError>,
}

#[derive(Deserialize)]
struct ApiError {
    #[serde(default)]
    code: String,
    #[serde(default)]
    info: String,
}

#[derive(Deserialize)]
struct Query {
    #[serde(default)]
    pages: Vec<Page>,
}

#[derive(Deserialize)]
struct Page {
    #[serde(default)]
    ns: i64,
    title: String,
    #[serde(default)]
    missing: bool,
    #[serde(default)]
    invalid: bool,
    #[serde(default)]
    pageprops: Option<PageProps>,
}

#[derive(Deserialize)]
struct PageProps {
    #[serde(default)]
    wikibase_item: Option<String>,
}

fn api_url(
    endpoints: &Endpoints,
    language: &str,
    params: &[(&str, &str)],
) -> Result<String, IngestError> {
    let base = endpoints.wiki_api.replace("{lang}", language);
    let mut url =
        url::Url::parse(&base).map_err(|e| IngestError::InvalidEndpoint(format!("{base}: {e}")))?;
    url.query_pairs_mut().extend_pairs(params);
    Ok(url.into())
}

fn api_get(
    transport: &dyn Transport,
    url: &str,
    policy: &FetchPolicy,
    seed: &SeedEntry,
) -> Result<ApiResponse, IngestError> {
    let r = get_with_retry(transport, url, policy)?;
    if r.status == 404 {
        return Err(IngestError::ArticleNotFound {
            language: seed.language.clone(),
            title: seed.article_title.clone(),
        });
    }
    if !(200..300).contains(&r.status) {
        return Err(network(url, format!("HTTP {}", r.status)));
    }
    let parsed: ApiResponse = json(url, &r.body)?;
    if let Some(e) = parsed.error {
        return Err(network(url, format!("API error {}: {}", e.code, e.info)));
    }
    Ok(parsed)
}

fn concept_id(language: &str, page: &Page) -> String {
    match page
        .pageprops
        .as_ref()
        .and_then(|p| p.wikibase_item.as_deref())
    {
        Some(q) if !q.is_empty() => q.to_owned(),
        _ => format!("{language}:{}", page.title),
    }
}

/// A seed article's outgoing links, resolved to concept identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outlinks {
    pub concepts: ConceptSet,
    /// Page title after following a redirect.
    pub resolved_title: String,
}

/// Lists the article-namespace links of the seed article and resolves each to
/// its entity identifier, falling back to `<lang>:<title>`. Red links are
/// dropped; a redirecting seed title is followed once.
pub fn fetch_outlinks(
    seed: &SeedEntry,
    policy: &FetchPolicy,
    endpoints: &Endpoints,
    transport: &dyn Transport,
) -> Result<Outlinks, IngestError> {
    let lang = seed.language.as_str();
    let info_url = api_url(
        endpoints,
        lang,
        &[
            ("action", "query"),
            ("format", "json"),
            ("formatversion", "2"),
            ("redirects", "1"),
            ("prop", "info|pageprops"),
            ("ppprop", "wikibase_item"),
            ("titles", &seed.article_title),
        ],
    )?;
    let info = api_get(transport, &info_url, policy, seed)?;
    let page = info
        .query
        .and_then(|q| q.pages.into_iter().next())
        .ok_or_else(|| network(&info_url, "no page in response"))?;
    if page.missing || page.invalid {
        return Err(IngestError::ArticleNotFound {
            language: lang.to_owned(),
            title: seed.article_title.clone(),
        });
    }
    let title = page.title;

    let mut concepts = BTreeSet::new();
    let mut continuation: BTreeMap<String, String> = BTreeMap::new();
    for _ in 0..MAX_CONTINUATIONS {
        let mut params: Vec<(&str, &str)> = vec![
            ("action", "query"),
            ("format", "json"),
            ("formatversion", "2"),
            ("generator", "links"),
            ("gplnamespace", "0"),
            ("gpllimit", "max"),
            ("prop", "pageprops"),
            ("ppprop", "wikibase_item"),
            ("redirects", "1"),
            ("titles", &title),
        ];
        params.extend(continuation.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        let url = api_url(endpoints, lang, &params)?;
        let batch = api_get(transport, &url, policy, seed)?;
        for p in batch.query.map(|q| q.pages).unwrap_or_default() {
            if p.ns == 0 && !p.missing && !p.invalid {
                concepts.insert(concept_id(lang, &p));
            }
        }
        let Some(next) = batch.continuation else {
            return Ok(Outlinks {
                concepts: ConceptSet {
                    language: lang.to_owned(),
                    cuisine: seed.cuisine.clone(),
                    concepts,
                },
                resolved_title: title,
            });
        };
        let next: BTreeMap<String, String> = next
            .into_iter()
            .map(|(k, v)| match v {
                serde_json::Value::String(s) => (k, s),
                other => (k, other.to_string()),
            })
            .collect();
        if next == continuation {
            return Err(network(&url, "continuation does not advance"));
        }
        continuation = next;
    }
    Err(network(
        &info_url,
        format!("more than {MAX_CONTINUATIONS} continuation requests"),
    ))
}

#[derive(Deserialize)]
struct ViewsResponse {
    #[serde(default)]
    items: Vec<ViewItem>,
}

#[derive(Deserialize)]
struct ViewItem {
    timestamp: String,
    views: u64,
}

fn rest_timestamp(m: Month, day: u8) -> String {
    format!("{:04}{:02}{day:02}00", m.year(), m.month())
}

fn parse_timestamp(ts: &str) -> Option<Month> {
    let year = ts.get(0..4)?.parse().ok()?;
    let month = ts.get(4..6)?.parse().ok()?;
    Month::new(year, month)
}

pub(crate) fn views_url(endpoints: &Endpoints, seed: &SeedEntry, months: MonthRange) -> String {
    let title = seed.article_title.replace(' ', "_");
    endpoints
        .views_api
        .replace("{lang}", &seed.language)
        .replace(
            "{title}",
            &utf8_percent_encode(&title, PATH_SEGMENT).to_string(),
        )
        .replace("{start}", &rest_timestamp(months.start, 1))
        .replace("{end}", &rest_timestamp(months.end, months.end.days()))
}

/// Monthly view counts for the seed article. Months without data are
/// omitted and logged; a 404 means no data at all.
pub fn fetch_views(
    seed: &SeedEntry,
    months: MonthRange,
    policy: &FetchPolicy,
    endpoints: &Endpoints,
    transport: &dyn Transport,
) -> Result<Vec<ViewRecord>, IngestError> {
    let url = views_url(endpoints, seed, months);
    let r = get_with_retry(transport, &url, policy)?;
    let mut by_month: BTreeMap<Month, u64> = BTreeMap::new();
    if r.status == 404 {
        log::info!(
            "no view data for {}:{} in {months}",
            seed.language,
            seed.article_title
        );
    } else if !(200..300).contains(&r.status) {
        return Err(network(&url, format!("HTTP {}", r.status)));
    } else {
        let parsed: ViewsResponse = json(&url, &r.body)?;
        for item in parsed.items {
            let m = parse_timestamp(&item.timestamp).ok_or_else(|| {
                network(
                    &url,
                    format!("invalid payload: bad timestamp {:?}", item.timestamp),
                )
            })?;
            if months.contains(m) {
                *by_month.entry(m).or_default() += item.views;
            }
        }
        for m in months.iter().filter(|m| !by_month.contains_key(m)) {
            log::info!(
                "no view data for {}:{} in {m}",
                seed.language,
                seed.article_title
            );
        }
    }
    Ok(by_month
        .into_iter()
        .map(|(month, views)| ViewRecord {
            language: seed.language.clone(),
            cuisine: seed.cuisine.clone(),
            month,
            views,
        })
        .collect())
}
