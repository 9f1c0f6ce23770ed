//! HTTP transports: live, record, replay and per-host pacing.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Response headers kept in cassettes and visible to callers.
const KEPT_HEADERS: [&str; 2] = ["content-type", "retry-after"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    /// Lowercase header names.
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    pub body: String,
}

impl HttpResponse {
    pub fn ok(body: impl Into<String>) -> Self {
        HttpResponse {
            status: 200,
            headers: BTreeMap::new(),
            body: body.into(),
        }
    }

    pub fn status(status: u16) -> Self {
        HttpResponse {
            status,
            headers: BTreeMap::new(),
            body: String::new(),
        }
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .get(&name.to_ascii_lowercase())
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{url}: {message}")]
pub struct TransportError {
    pub url: String,
    pub message: String,
}

/// A blocking GET. Non-2xx statuses are responses, not errors; errors are
/// reserved for failures to obtain any response.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for &T {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        (**self).get(url)
    }
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        (**self).get(url)
    }
}

/// One recorded request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cassette {
    pub url: String,
    pub status: u16,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    pub body: String,
}

/// File name used when recording `url`.
pub fn cassette_file_name(url: &str) -> String {
    let digest = Sha256::digest(url.as_bytes());
    format!("{}.json", &hex::encode(digest)[..16])
}

/// Serves responses from a directory of cassette files, matched on URL.
/// Files ending in `.expected.json` are test sidecars and are skipped.
#[derive(Debug, Clone)]
pub struct ReplayTransport {
    cassettes: BTreeMap<String, HttpResponse>,
}

impl ReplayTransport {
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, TransportError> {
        let dir = dir.as_ref();
        let err = |path: &Path, message: String| TransportError {
            url: path.display().to_string(),
            message,
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| err(dir, e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                name.ends_with(".json") && !name.ends_with(".expected.json")
            })
            .collect();
        paths.sort();
        let mut cassettes = BTreeMap::new();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|e| err(&path, e.to_string()))?;
            let c: Cassette = serde_json::from_str(&text)
                .map_err(|e| err(&path, format!("invalid cassette: {e}")))?;
            let response = HttpResponse {
                status: c.status,
                headers: c.headers,
                body: c.body,
            };
            if cassettes.insert(c.url.clone(), response).is_some() {
                return Err(err(&path, format!("second cassette for {}", c.url)));
            }
        }
        Ok(ReplayTransport { cassettes })
    }

    pub fn len(&self) -> usize {
        self.cassettes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cassettes.is_empty()
    }
}

impl Transport for ReplayTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        self.cassettes
            .get(url)
            .cloned()
            .ok_or_else(|| TransportError {
                url: url.to_owned(),
                message: "no recorded response".into(),
            })
    }
}

/// Forwards to an inner transport and writes every response as a cassette.
pub struct RecordingTransport<T> {
    inner: T,
    dir: PathBuf,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(RecordingTransport { inner, dir })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let response = self.inner.get(url)?;
        let cassette = Cassette {
            url: url.to_owned(),
            status: response.status,
            headers: response.headers.clone(),
            body: response.body.clone(),
        };
        let path = self.dir.join(cassette_file_name(url));
        let text = serde_json::to_string_pretty(&cassette).expect("cassette serializes") + "\n";
        fs::write(&path, text).map_err(|e| TransportError {
            url: url.to_owned(),
            message: format!("{}: {e}", path.display()),
        })?;
        Ok(response)
    }
}

/// Real HTTP through `ureq`.
pub struct LiveTransport {
    agent: ureq::Agent,
}

impl LiveTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(concat!("ccrm/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        LiveTransport { agent }
    }
}

impl Transport for LiveTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let err = |message: String| TransportError {
            url: url.to_owned(),
            message,
        };
        let mut response = self.agent.get(url).call().map_err(|e| err(e.to_string()))?;
        let mut headers = BTreeMap::new();
        for name in KEPT_HEADERS {
            if let Some(v) = response.headers().get(name).and_then(|v| v.to_str().ok()) {
                headers.insert(name.to_owned(), v.to_owned());
            }
        }
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| err(e.to_string()))?;
        Ok(HttpResponse {
            status,
            headers,
            body,
        })
    }
}

pub fn host_of(url: &str) -> String {
    url::Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Enforces a minimum pause between the end of one request to a host and
/// the start of the next.
///
/// With a nonzero interval, requests to one host are serialized: the host
/// slot is held from the wait until the inner call returns. Different hosts
/// proceed in parallel.
pub struct PacedTransport<T> {
    inner: T,
    interval: Duration,
    hosts: Mutex<HashMap<String, Arc<Mutex<Option<Instant>>>>>,
}

impl<T: Transport> PacedTransport<T> {
    pub fn new(inner: T, interval: Duration) -> Self {
        PacedTransport {
            inner,
            interval,
            hosts: Mutex::new(HashMap::new()),
        }
    }
}

impl<T: Transport> Transport for PacedTransport<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        if self.interval.is_zero() {
            return self.inner.get(url);
        }
        let slot = self
            .hosts
            .lock()
            .expect("host table")
            .entry(host_of(url))
            .or_default()
            .clone();
        let mut last = slot.lock().expect("host slot");
        if let Some(prev) = *last {
            let ready = prev + self.interval;
            let now = Instant::now();
            if ready > now {
                thread::sleep(ready - now);
            }
        }
        let response = self.inner.get(url);
        *last = Some(Instant::now());
        response
    }
}
