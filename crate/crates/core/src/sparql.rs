//! Minimal SPARQL-over-HTTP SELECT client with a JSONL disk cache.
//!
//! Every query result is cached keyed by (endpoint, key, query-hash), so
//! repeated runs are reproducible offline: a warm cache is served without
//! touching the network at all.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One result row: variable name to plain value.
pub type SparqlRow = BTreeMap<String, String>;

/// FNV-1a 64-bit hash of the query text, as fixed-width hex. Stable across
/// runs and platforms; used only as a cache key component.
pub fn query_hash(query: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in query.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheLine {
    endpoint: String,
    key: String,
    query_hash: String,
    /// A concrete result row, or `None` for the completion marker that makes
    /// a key warm even when its result set was empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row: Option<SparqlRow>,
}

/// Append-only JSONL cache of raw result rows.
#[derive(Debug)]
pub struct QueryCache {
    path: PathBuf,
    entries: HashMap<(String, String, String), Vec<SparqlRow>>,
}

impl QueryCache {
    /// Opens (or lazily creates) the cache at `path`.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries: HashMap<(String, String, String), Vec<SparqlRow>> = HashMap::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if line.is_empty() {
                    continue;
                }
                let parsed: CacheLine =
                    serde_json::from_str(&line).map_err(|e| Error::JsonLine {
                        path: path.clone(),
                        line: idx + 1,
                        message: e.to_string(),
                    })?;
                let key = (parsed.endpoint, parsed.key, parsed.query_hash);
                let slot = entries.entry(key).or_default();
                if let Some(row) = parsed.row {
                    slot.push(row);
                }
            }
        }
        Ok(QueryCache { path, entries })
    }

    pub fn get(&self, endpoint: &str, key: &str, hash: &str) -> Option<&[SparqlRow]> {
        self.entries
            .get(&(endpoint.to_string(), key.to_string(), hash.to_string()))
            .map(Vec::as_slice)
    }

    /// Records a completed query. Rows are appended to the file followed by
    /// a completion marker; an already-present key is left untouched.
    pub fn put(&mut self, endpoint: &str, key: &str, hash: &str, rows: &[SparqlRow]) -> Result<()> {
        let map_key = (endpoint.to_string(), key.to_string(), hash.to_string());
        if self.entries.contains_key(&map_key) {
            return Ok(());
        }
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        let mut write_line = |line: &CacheLine| -> Result<()> {
            let json = serde_json::to_string(line).expect("cache line serializes");
            writeln!(file, "{json}").map_err(|e| Error::io(&self.path, e))
        };
        for row in rows {
            write_line(&CacheLine {
                endpoint: endpoint.to_string(),
                key: key.to_string(),
                query_hash: hash.to_string(),
                row: Some(row.clone()),
            })?;
        }
        write_line(&CacheLine {
            endpoint: endpoint.to_string(),
            key: key.to_string(),
            query_hash: hash.to_string(),
            row: None,
        })?;
        self.entries.insert(map_key, rows.to_vec());
        Ok(())
    }
}

enum SelectError {
    Transport(String),
    Malformed(String),
}

struct SparqlClient {
    http: reqwest::blocking::Client,
}

impl SparqlClient {
    fn new(timeout: Duration) -> std::result::Result<Self, SelectError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("corpustag/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| SelectError::Transport(e.to_string()))?;
        Ok(SparqlClient { http })
    }

    fn select(
        &self,
        endpoint: &str,
        query: &str,
    ) -> std::result::Result<Vec<SparqlRow>, SelectError> {
        let response = self
            .http
            .post(endpoint)
            .header("Content-Type", "application/sparql-query")
            .header("Accept", "application/sparql-results+json")
            .body(query.to_string())
            .send()
            .map_err(|e| SelectError::Transport(e.to_string()))?;
        if !response.status().is_success() {
            return Err(SelectError::Transport(format!(
                "HTTP status {}",
                response.status()
            )));
        }
        let body: serde_json::Value = response
            .json()
            .map_err(|e| SelectError::Malformed(e.to_string()))?;
        parse_select_results(&body).map_err(SelectError::Malformed)
    }
}

fn parse_select_results(body: &serde_json::Value) -> std::result::Result<Vec<SparqlRow>, String> {
    let bindings = body
        .get("results")
        .and_then(|r| r.get("bindings"))
        .and_then(|b| b.as_array())
        .ok_or_else(|| "missing results.bindings array".to_string())?;
    let mut rows = Vec::with_capacity(bindings.len());
    for binding in bindings {
        let obj = binding
            .as_object()
            .ok_or_else(|| "binding is not an object".to_string())?;
        let mut row = SparqlRow::new();
        for (var, cell) in obj {
            let value = cell
                .get("value")
                .and_then(|v| v.as_str())
                .ok_or_else(|| format!("binding {var} has no string value"))?;
            row.insert(var.clone(), value.to_string());
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Cache-first SPARQL access. The HTTP client is only constructed when a
/// cache miss actually requires the network.
pub struct CachedSparql {
    cache: QueryCache,
    timeout: Duration,
    client: Option<SparqlClient>,
    network_calls: usize,
}

impl CachedSparql {
    pub fn open(cache_path: impl Into<PathBuf>, timeout: Duration) -> Result<Self> {
        Ok(CachedSparql {
            cache: QueryCache::open(cache_path)?,
            timeout,
            client: None,
            network_calls: 0,
        })
    }

    /// Runs `query` against `endpoint`, serving from the cache when warm.
    /// `key` names the logical unit being fetched (an entity type or a
    /// surface form) and is carried into error messages.
    pub fn select_cached(
        &mut self,
        endpoint: &str,
        key: &str,
        query: &str,
    ) -> Result<Vec<SparqlRow>> {
        let hash = query_hash(query);
        if let Some(rows) = self.cache.get(endpoint, key, &hash) {
            return Ok(rows.to_vec());
        }
        if self.client.is_none() {
            self.client = Some(SparqlClient::new(self.timeout).map_err(|e| match e {
                SelectError::Transport(message) | SelectError::Malformed(message) => Error::Fetch {
                    endpoint: endpoint.to_string(),
                    entity_type: key.to_string(),
                    message,
                },
            })?);
        }
        self.network_calls += 1;
        let rows = self
            .client
            .as_ref()
            .expect("client just constructed")
            .select(endpoint, query)
            .map_err(|e| match e {
                SelectError::Transport(message) => Error::Fetch {
                    endpoint: endpoint.to_string(),
                    entity_type: key.to_string(),
                    message,
                },
                SelectError::Malformed(message) => Error::SparqlResponse {
                    endpoint: endpoint.to_string(),
                    message,
                },
            })?;
        self.cache.put(endpoint, key, &hash, &rows)?;
        Ok(rows)
    }

    /// Number of HTTP requests issued so far.
    pub fn network_calls(&self) -> usize {
        self.network_calls
    }
}
