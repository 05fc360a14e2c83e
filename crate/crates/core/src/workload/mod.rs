//! Queries, workload statistics and sweep settings.

mod config;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SizeProfile;

pub use config::{load_use_case, ConfigError, UseCase, TPCC_FIXTURE};

/// One sweep point: data volume (scale, warehouses for TPC-C) and cluster size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Settings {
    pub scale: u64,
    pub servers: u64,
}

impl Settings {
    pub fn new(scale: u64, servers: u64) -> Self {
        Settings { scale, servers }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Filter,
    Join,
    Update,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryMode {
    Read,
    Update,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub kind: QueryKind,
    pub filter_keys: Vec<String>,
    pub projection_keys: Vec<String>,
    pub join_keys: Vec<String>,
    /// Filter keys usable as sharding keys.
    pub sharded_keys: Vec<String>,
    /// Average occurrences per day.
    pub occurrences: f64,
    /// Latency bound in seconds.
    pub latency_bound: f64,
    /// Request size in bytes; falls back to the statistics default.
    pub message_size: Option<f64>,
}

impl Query {
    pub fn mode(&self) -> QueryMode {
        match self.kind {
            QueryKind::Update => QueryMode::Update,
            QueryKind::Filter | QueryKind::Join => QueryMode::Read,
        }
    }

    /// Filter, projection and join keys in that order, without repeats.
    pub fn required_keys(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.filter_keys
            .iter()
            .chain(&self.projection_keys)
            .chain(&self.join_keys)
            .filter(|k| seen.insert(k.as_str()))
            .cloned()
            .collect()
    }

    pub fn key_set(&self) -> BTreeSet<String> {
        self.required_keys().into_iter().collect()
    }

    pub fn is_sharded_on(&self, key: &str) -> bool {
        self.sharded_keys.iter().any(|k| k == key)
    }
}

/// Workload statistics shared by every candidate model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub profile: SizeProfile,
    /// Fraction of documents matching a filter on each key.
    pub selectivity: BTreeMap<String, f64>,
    /// Keys with a local index on every server.
    pub indexed: BTreeSet<String>,
    /// Bytes read to route a request through the shard map.
    pub shard_lookup_size: f64,
    /// Per-key index probe sizes; unset keys use the B-tree estimate.
    pub index_size: BTreeMap<String, f64>,
    /// Default request size in bytes.
    pub query_size: f64,
}

impl Statistics {
    pub const DEFAULT_QUERY_SIZE: f64 = 512.0;
    pub const DEFAULT_SHARD_LOOKUP_SIZE: f64 = 1024.0;

    pub fn new(profile: SizeProfile) -> Self {
        Statistics {
            profile,
            selectivity: BTreeMap::new(),
            indexed: BTreeSet::new(),
            shard_lookup_size: Self::DEFAULT_SHARD_LOOKUP_SIZE,
            index_size: BTreeMap::new(),
            query_size: Self::DEFAULT_QUERY_SIZE,
        }
    }

    pub fn is_indexed(&self, key: &str) -> bool {
        self.indexed.contains(key)
    }

    pub fn message_size(&self, query: &Query) -> f64 {
        query.message_size.unwrap_or(self.query_size)
    }

    /// Bytes read per server to probe the index on `key` when each server
    /// holds `local_docs` documents: one B-tree path of `(key size + 8)`-byte
    /// entries unless an explicit size is configured.
    pub fn index_probe_size(&self, key: &str, local_docs: f64) -> Result<f64, SelectivityError> {
        if let Some(size) = self.index_size.get(key) {
            return Ok(*size);
        }
        let key_size = self
            .profile
            .key_size
            .get(key)
            .copied()
            .ok_or_else(|| SelectivityError::MissingKeySize(key.to_string()))?;
        let depth = local_docs.max(2.0).log2().ceil();
        Ok(depth * (key_size + 8.0))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectivityError {
    #[error("no selectivity configured for filter key `{0}`")]
    Missing(String),
    #[error("no size configured for key `{0}`")]
    MissingKeySize(String),
}

/// Combined selectivity of several filter keys, assuming independence.
/// An empty key list selects everything.
pub fn effective_selectivity<S: AsRef<str>>(
    keys: &[S],
    stats: &Statistics,
) -> Result<f64, SelectivityError> {
    let mut sel = 1.0;
    for key in keys {
        let key = key.as_ref();
        sel *= stats
            .selectivity
            .get(key)
            .copied()
            .ok_or_else(|| SelectivityError::Missing(key.to_string()))?;
    }
    Ok(sel.clamp(f64::MIN_POSITIVE, 1.0))
}
