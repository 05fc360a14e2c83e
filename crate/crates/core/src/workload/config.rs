//! TOML use-case documents: model, statistics, queries, sweep and constants.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Query, QueryKind, Settings, Statistics};
use crate::cost::Constants;
use crate::model::{validate, DataModel, KeyKind, ModelBuilder, SizeProfile};

/// The bundled TPC-C use case (warehouse, customer, order).
pub const TPCC_FIXTURE: &str = include_str!("../../fixtures/tpcc.toml");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.into(), message: message.into() }
}

/// Everything a run needs: the normalized root model, the workload and the
/// sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct UseCase {
    pub model: DataModel,
    pub queries: Vec<Query>,
    pub statistics: Statistics,
    pub scales: Vec<u64>,
    pub servers: Vec<u64>,
    pub constants: Constants,
}

impl UseCase {
    /// The bundled TPC-C use case.
    pub fn tpcc() -> UseCase {
        load_use_case(TPCC_FIXTURE).expect("bundled fixture is valid")
    }

    /// Every (scale, servers) pair of the sweep grid, scale-major.
    pub fn settings(&self) -> Vec<Settings> {
        self.scales
            .iter()
            .flat_map(|&scale| self.servers.iter().map(move |&servers| Settings { scale, servers }))
            .collect()
    }

    /// Writes the use case back to a TOML document that reloads to an equal value.
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        let mut concepts: Vec<ConceptDoc> = Vec::new();
        for c in &self.model.concepts {
            let mut rows = Vec::new();
            for r in &c.rows {
                if r.has_nested() {
                    return Err(invalid("model", "only normalized models can be written"));
                }
                rows.push(RowDoc {
                    name: r.origin.row.clone(),
                    primary_key: r.primary_key.clone(),
                    keys: r
                        .keys
                        .iter()
                        .filter(|k| matches!(k.kind, KeyKind::Atomic))
                        .map(|k| k.name.clone())
                        .collect(),
                    documents_per_scale: self
                        .statistics
                        .profile
                        .row_count
                        .get(&r.origin.row)
                        .copied()
                        .unwrap_or_default(),
                });
            }
            concepts.push(ConceptDoc { name: c.name.clone(), rows });
        }
        let references = self
            .model
            .references
            .iter()
            .map(|r| {
                let name = |id| self.model.row(id).map(|r| r.origin.row.clone()).unwrap_or_default();
                ReferenceDoc {
                    from: format!("{}.{}", name(r.source.row), r.source.key),
                    to: format!("{}.{}", name(r.target.row), r.target.key),
                    cardinality: r.cardinality,
                }
            })
            .collect();
        let doc = Document {
            model: ModelDoc { name: self.model.name.clone(), concepts, references },
            statistics: StatisticsDoc {
                query_size: Some(self.statistics.query_size),
                shard_lookup_size: Some(self.statistics.shard_lookup_size),
                indexed: self.statistics.indexed.iter().cloned().collect(),
                key_sizes: self.statistics.profile.key_size.clone(),
                selectivity: self.statistics.selectivity.clone(),
                index_size: self.statistics.index_size.clone(),
            },
            queries: self
                .queries
                .iter()
                .map(|q| QueryDoc {
                    id: q.id.clone(),
                    kind: q.kind,
                    filter: q.filter_keys.clone(),
                    projection: q.projection_keys.clone(),
                    join: q.join_keys.clone(),
                    sharding: q.sharded_keys.clone(),
                    occurrences: q.occurrences,
                    constraint: q.latency_bound.is_finite().then_some(q.latency_bound),
                    message_size: q.message_size,
                })
                .collect(),
            sweep: Some(SweepDoc { scales: self.scales.clone(), servers: self.servers.clone() }),
            constants: Some(self.constants.clone()),
        };
        toml::to_string(&doc).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    model: ModelDoc,
    statistics: StatisticsDoc,
    #[serde(default)]
    queries: Vec<QueryDoc>,
    sweep: Option<SweepDoc>,
    constants: Option<Constants>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    concepts: Vec<ConceptDoc>,
    #[serde(default)]
    references: Vec<ReferenceDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConceptDoc {
    name: String,
    rows: Vec<RowDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowDoc {
    name: String,
    primary_key: String,
    keys: Vec<String>,
    documents_per_scale: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceDoc {
    from: String,
    to: String,
    cardinality: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatisticsDoc {
    query_size: Option<f64>,
    shard_lookup_size: Option<f64>,
    #[serde(default)]
    indexed: Vec<String>,
    key_sizes: BTreeMap<String, f64>,
    #[serde(default)]
    selectivity: BTreeMap<String, f64>,
    #[serde(default)]
    index_size: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryDoc {
    id: String,
    #[serde(rename = "type")]
    kind: QueryKind,
    #[serde(default)]
    filter: Vec<String>,
    projection: Vec<String>,
    #[serde(default)]
    join: Vec<String>,
    #[serde(default)]
    sharding: Vec<String>,
    occurrences: f64,
    /// Latency bound in seconds; absent means unconstrained.
    constraint: Option<f64>,
    message_size: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    scales: Vec<u64>,
    servers: Vec<u64>,
}

/// Parses and validates a use-case document. Every key name is resolved
/// against the model; errors carry the path of the offending entry.
pub fn load_use_case(text: &str) -> Result<UseCase, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

    let mut builder = ModelBuilder::new(doc.model.name.clone());
    let mut row_keys: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut row_count = BTreeMap::new();
    for (ci, c) in doc.model.concepts.iter().enumerate() {
        if c.rows.is_empty() {
            return Err(invalid(format!("model.concepts[{ci}]"), "concept has no rows"));
        }
        for (ri, r) in c.rows.iter().enumerate() {
            let path = format!("model.concepts[{ci}].rows[{ri}]");
            if row_keys.contains_key(&r.name) {
                return Err(invalid(path, format!("duplicate row `{}`", r.name)));
            }
            let keys: BTreeSet<String> = r.keys.iter().cloned().collect();
            if keys.len() != r.keys.len() {
                return Err(invalid(format!("{path}.keys"), "duplicate key name"));
            }
            if !keys.contains(&r.primary_key) {
                return Err(invalid(
                    format!("{path}.primary_key"),
                    format!("`{}` is not one of the row's keys", r.primary_key),
                ));
            }
            if !(r.documents_per_scale >= 0.0) {
                return Err(invalid(format!("{path}.documents_per_scale"), "must be non-negative"));
            }
            let key_refs: Vec<&str> = r.keys.iter().map(String::as_str).collect();
            builder = builder.row(&c.name, &r.name, &r.primary_key, &key_refs);
            row_keys.insert(r.name.clone(), keys);
            row_count.insert(r.name.clone(), r.documents_per_scale);
        }
    }
    let all_keys: BTreeSet<String> = row_keys.values().flatten().cloned().collect();
    if all_keys.len() != row_keys.values().map(BTreeSet::len).sum::<usize>() {
        return Err(invalid("model", "key names must be unique across rows"));
    }

    for (i, r) in doc.model.references.iter().enumerate() {
        let path = format!("model.references[{i}]");
        let (sr, sk) = split_endpoint(&r.from, &format!("{path}.from"), &row_keys)?;
        let (tr, tk) = split_endpoint(&r.to, &format!("{path}.to"), &row_keys)?;
        if !(r.cardinality > 0.0) {
            return Err(invalid(format!("{path}.cardinality"), "must be positive"));
        }
        builder = builder.reference(&sr, &sk, &tr, &tk, r.cardinality);
    }
    let model = builder.build().map_err(|e| invalid("model", e.to_string()))?;
    let report = validate(&model);
    if !report.is_ok() {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(invalid("model", msgs.join("; ")));
    }

    let s = &doc.statistics;
    for key in &all_keys {
        match s.key_sizes.get(key) {
            None => return Err(invalid("statistics.key_sizes", format!("missing size for `{key}`"))),
            Some(v) if !(*v > 0.0) => {
                return Err(invalid(format!("statistics.key_sizes.{key}"), "must be positive"))
            }
            Some(_) => {}
        }
    }
    for (key, sel) in &s.selectivity {
        if !all_keys.contains(key) {
            return Err(invalid(format!("statistics.selectivity.{key}"), "unknown key"));
        }
        if !(*sel > 0.0 && *sel <= 1.0) {
            return Err(invalid(format!("statistics.selectivity.{key}"), "must lie in (0, 1]"));
        }
    }
    for (i, key) in s.indexed.iter().enumerate() {
        if !all_keys.contains(key) {
            return Err(invalid(format!("statistics.indexed[{i}]"), format!("unknown key `{key}`")));
        }
    }
    for key in s.index_size.keys() {
        if !all_keys.contains(key) {
            return Err(invalid(format!("statistics.index_size.{key}"), "unknown key"));
        }
    }
    let statistics = Statistics {
        profile: SizeProfile {
            key_size: s.key_sizes.iter().filter(|(k, _)| all_keys.contains(*k)).map(|(k, v)| (k.clone(), *v)).collect(),
            row_count,
        },
        selectivity: s.selectivity.clone(),
        indexed: s.indexed.iter().cloned().collect(),
        shard_lookup_size: s.shard_lookup_size.unwrap_or(Statistics::DEFAULT_SHARD_LOOKUP_SIZE),
        index_size: s.index_size.clone(),
        query_size: s.query_size.unwrap_or(Statistics::DEFAULT_QUERY_SIZE),
    };

    let mut queries = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, q) in doc.queries.iter().enumerate() {
        let path = format!("queries[{i}]");
        if !ids.insert(q.id.clone()) {
            return Err(invalid(format!("{path}.id"), format!("duplicate query id `{}`", q.id)));
        }
        for (field, keys) in
            [("filter", &q.filter), ("projection", &q.projection), ("join", &q.join), ("sharding", &q.sharding)]
        {
            for (j, key) in keys.iter().enumerate() {
                if !all_keys.contains(key) {
                    return Err(invalid(format!("{path}.{field}[{j}]"), format!("unknown key `{key}`")));
                }
            }
        }
        if q.projection.is_empty() {
            return Err(invalid(format!("{path}.projection"), "must not be empty"));
        }
        for (j, key) in q.sharding.iter().enumerate() {
            if !q.filter.contains(key) {
                return Err(invalid(format!("{path}.sharding[{j}]"), format!("`{key}` is not a filter key")));
            }
        }
        for (j, key) in q.filter.iter().enumerate() {
            if !statistics.selectivity.contains_key(key) {
                return Err(invalid(format!("{path}.filter[{j}]"), format!("no selectivity for `{key}`")));
            }
        }
        if !(q.occurrences >= 0.0) {
            return Err(invalid(format!("{path}.occurrences"), "must be non-negative"));
        }
        let bound = q.constraint.unwrap_or(f64::INFINITY);
        if !(bound > 0.0) {
            return Err(invalid(format!("{path}.constraint"), "must be positive"));
        }
        if let Some(size) = q.message_size {
            if !(size >= 0.0) {
                return Err(invalid(format!("{path}.message_size"), "must be non-negative"));
            }
        }
        queries.push(Query {
            id: q.id.clone(),
            kind: q.kind,
            filter_keys: q.filter.clone(),
            projection_keys: q.projection.clone(),
            join_keys: q.join.clone(),
            sharded_keys: q.sharding.clone(),
            occurrences: q.occurrences,
            latency_bound: bound,
            message_size: q.message_size,
        });
    }

    let (scales, servers) = match &doc.sweep {
        Some(s) => (s.scales.clone(), s.servers.clone()),
        None => (vec![1], vec![1]),
    };
    if scales.is_empty() || scales.contains(&0) {
        return Err(invalid("sweep.scales", "must be a non-empty list of values >= 1"));
    }
    if servers.is_empty() || servers.contains(&0) {
        return Err(invalid("sweep.servers", "must be a non-empty list of values >= 1"));
    }
    let constants = doc.constants.unwrap_or_default();
    constants.check().map_err(|field| invalid(format!("constants.{field}"), "must be positive"))?;

    Ok(UseCase { model, queries, statistics, scales, servers, constants })
}

fn split_endpoint(
    text: &str,
    path: &str,
    rows: &BTreeMap<String, BTreeSet<String>>,
) -> Result<(String, String), ConfigError> {
    let (row, key) = text
        .split_once('.')
        .ok_or_else(|| invalid(path, format!("expected `Row.key`, got `{text}`")))?;
    match rows.get(row) {
        None => Err(invalid(path, format!("unknown row `{row}`"))),
        Some(keys) if !keys.contains(key) => Err(invalid(path, format!("row `{row}` has no key `{key}`"))),
        Some(_) => Ok((row.to_string(), key.to_string())),
    }
}
