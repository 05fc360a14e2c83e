//! Query planning over a model and the nested-loop cost recurrence.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::volume::{dimension_costs, filter_volumes, static_cost, CostVector, RowAccess, Strategy};
use super::{Constants, CostError};
use crate::model::{document_count, document_size, projected_size, DataModel, Row, RowId};
use crate::workload::{effective_selectivity, Query, Settings, Statistics};

/// A row chosen to answer a query and the required keys it supplies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveredRow {
    pub row: RowId,
    pub label: String,
    pub keys: Vec<String>,
}

/// Rows needed to answer `query`. Required keys are taken in order (filter,
/// projection, join); a key not yet supplied by a chosen row pulls in the
/// first row, in collation order, that can supply it. A row supplies the keys
/// stored anywhere in its document plus the reference keys folded away by
/// merges inside it.
pub fn covered_rows(model: &DataModel, query: &Query) -> Result<Vec<CoveredRow>, CostError> {
    let rows = model.ordered_rows();
    let available: Vec<BTreeSet<String>> = rows.iter().map(|r| r.available_keys()).collect();
    let labels = model.labels();
    let mut chosen: Vec<(usize, Vec<String>)> = Vec::new();
    for key in query.required_keys() {
        if let Some((_, keys)) = chosen.iter_mut().find(|(i, _)| available[*i].contains(&key)) {
            keys.push(key);
            continue;
        }
        let i = available
            .iter()
            .position(|a| a.contains(&key))
            .ok_or_else(|| CostError::Uncoverable(key.clone()))?;
        chosen.push((i, vec![key]));
    }
    Ok(chosen
        .into_iter()
        .map(|(i, keys)| CoveredRow { row: rows[i].id, label: labels[&rows[i].id].clone(), keys })
        .collect())
}

/// One row visit of a plan. The first step runs once; every later step runs
/// once per result of the steps before it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanStep {
    pub row: RowId,
    pub label: String,
    pub strategy: Strategy,
    /// Key matched against the results of earlier steps.
    pub probe: Option<String>,
    pub filters: Vec<String>,
    pub projection: Vec<String>,
    pub document_size: f64,
    pub projected_size: f64,
    pub documents: f64,
    pub selectivity: f64,
}

impl PlanStep {
    /// Documents matched by one execution of the step.
    pub fn matches(&self) -> f64 {
        self.documents * self.selectivity
    }

    fn access(&self) -> RowAccess {
        RowAccess {
            document_size: self.document_size,
            projected_size: self.projected_size,
            documents: self.documents,
            selectivity: self.selectivity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPlan {
    pub query: String,
    pub steps: Vec<PlanStep>,
}

struct Candidate<'a> {
    row: &'a Row,
    rank: usize,
    available: BTreeSet<String>,
    stored: BTreeSet<String>,
    documents: f64,
}

/// Join key used to reach a row and the fraction of its documents it keeps.
type Probe = (String, f64);

/// Orders the covered rows into a nested-loop plan. The plan starts from the
/// row with the fewest local matches and repeatedly joins the connected row
/// with the fewest matches per probe; ties follow collation order.
pub fn plan_query(
    model: &DataModel,
    query: &Query,
    settings: &Settings,
    stats: &Statistics,
) -> Result<QueryPlan, CostError> {
    let covered = covered_rows(model, query)?;
    let ordered = model.ordered_rows();
    let labels = model.labels();
    let mut pending: Vec<Candidate> = Vec::new();
    for c in &covered {
        let rank = ordered.iter().position(|r| r.id == c.row).expect("covered rows are top-level");
        let row = ordered[rank];
        pending.push(Candidate {
            row,
            rank,
            available: row.available_keys(),
            stored: row.deep_atomic_keys(),
            documents: document_count(row, settings, &stats.profile)?,
        });
    }
    let domains = key_domains(model, settings, stats)?;
    let links = reference_pairs(model);

    let mut placed: Vec<Candidate> = Vec::new();
    let mut applied_filters: BTreeSet<String> = BTreeSet::new();
    let mut projected: BTreeSet<String> = BTreeSet::new();
    let mut steps = Vec::new();

    while !pending.is_empty() {
        // (matches, collation rank, index in pending, probe)
        let mut best: Option<(f64, usize, usize, Option<Probe>)> = None;
        for (i, cand) in pending.iter().enumerate() {
            let filters: Vec<&String> = query
                .filter_keys
                .iter()
                .filter(|k| cand.stored.contains(*k) && !applied_filters.contains(*k))
                .collect();
            let local = effective_selectivity(&filters, stats)?;
            let probe = if placed.is_empty() {
                None
            } else {
                best_probe(cand, &placed, &links, &domains, stats)
            };
            if !placed.is_empty() && probe.is_none() && pending_has_link(&pending, &placed, &links) {
                continue;
            }
            let nb = cand.documents * local * probe.as_ref().map_or(1.0, |(_, s)| *s);
            let better = match &best {
                None => true,
                Some((b_nb, b_rank, _, _)) => nb < *b_nb || (nb == *b_nb && cand.rank < *b_rank),
            };
            if better {
                best = Some((nb, cand.rank, i, probe));
            }
        }
        let (_, _, i, probe) = best.expect("at least one candidate remains");
        let cand = pending.remove(i);

        let filters: Vec<String> = query
            .filter_keys
            .iter()
            .filter(|k| cand.stored.contains(*k) && !applied_filters.contains(*k))
            .cloned()
            .collect();
        let projection: Vec<String> = query
            .projection_keys
            .iter()
            .filter(|k| cand.stored.contains(*k) && !projected.contains(*k))
            .cloned()
            .collect();
        let strategy = choose_strategy(&filters, probe.as_ref().map(|(k, _)| k.as_str()), query, stats);
        let local = effective_selectivity(&filters, stats)?;
        let selectivity = local * probe.as_ref().map_or(1.0, |(_, s)| *s);
        let proj_set: BTreeSet<String> = projection.iter().cloned().collect();
        steps.push(PlanStep {
            row: cand.row.id,
            label: labels[&cand.row.id].clone(),
            strategy,
            probe: probe.map(|(k, _)| k),
            document_size: document_size(cand.row, &stats.profile)?,
            projected_size: projected_size(cand.row, &proj_set, &stats.profile)?,
            documents: cand.documents,
            selectivity,
            filters: filters.clone(),
            projection: projection.clone(),
        });
        applied_filters.extend(filters);
        projected.extend(projection);
        placed.push(cand);
    }
    Ok(QueryPlan { query: query.id.clone(), steps })
}

/// Sharding key first, then an index on a filter key, then an index on the
/// probe key, else a scan.
fn choose_strategy(filters: &[String], probe: Option<&str>, query: &Query, stats: &Statistics) -> Strategy {
    if let Some(k) = query.sharded_keys.iter().find(|k| filters.contains(k)) {
        return Strategy::Sharded(k.clone());
    }
    if let Some(k) = filters.iter().find(|k| stats.is_indexed(k)) {
        return Strategy::Indexed(k.clone());
    }
    match probe {
        Some(k) if stats.is_indexed(k) => Strategy::Indexed(k.to_string()),
        _ => Strategy::Scan,
    }
}

/// Key pairs of every reference, merged ones included: (source key, target key).
fn reference_pairs(model: &DataModel) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = model
        .references
        .iter()
        .chain(model.merge_records().into_iter().map(|m| &m.reference))
        .map(|r| (r.source.key.clone(), r.target.key.clone()))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Number of distinct values of each identifying key: a primary key ranges
/// over its own row, a referencing key over the row it references.
fn key_domains(
    model: &DataModel,
    settings: &Settings,
    stats: &Statistics,
) -> Result<BTreeMap<String, f64>, CostError> {
    let mut out = BTreeMap::new();
    for row in model.all_rows() {
        if let Some(base) = stats.profile.row_count.get(&row.origin.row) {
            out.insert(row.primary_key.clone(), base * settings.scale as f64);
        }
    }
    for (source, target) in reference_pairs(model) {
        if let Some(n) = out.get(&target).copied() {
            out.entry(source).or_insert(n);
        }
    }
    Ok(out)
}

/// The most selective key linking `cand` to an already placed row.
fn best_probe(
    cand: &Candidate,
    placed: &[Candidate],
    links: &[(String, String)],
    domains: &BTreeMap<String, f64>,
    stats: &Statistics,
) -> Option<Probe> {
    let mut keys: BTreeSet<&String> = BTreeSet::new();
    for p in placed {
        keys.extend(cand.available.intersection(&p.available));
        for (s, t) in links {
            if cand.available.contains(s) && p.available.contains(t) {
                keys.insert(s);
            }
            if cand.available.contains(t) && p.available.contains(s) {
                keys.insert(t);
            }
        }
    }
    keys.into_iter()
        .map(|k| {
            let domain = domains.get(k).copied().unwrap_or(cand.documents).max(1.0);
            (k, 1.0 / domain)
        })
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then_with(|| stats.is_indexed(b.0).cmp(&stats.is_indexed(a.0)))
                .then_with(|| a.0.cmp(b.0))
        })
        .map(|(k, s)| (k.clone(), s))
}

fn pending_has_link(pending: &[Candidate], placed: &[Candidate], links: &[(String, String)]) -> bool {
    pending.iter().any(|c| {
        placed.iter().any(|p| {
            c.available.intersection(&p.available).next().is_some()
                || links.iter().any(|(s, t)| {
                    (c.available.contains(s) && p.available.contains(t))
                        || (c.available.contains(t) && p.available.contains(s))
                })
        })
    })
}

/// Cost of one execution of `query`: the first step once, each later step
/// once per result accumulated so far.
pub fn query_cost(
    model: &DataModel,
    query: &Query,
    settings: &Settings,
    stats: &Statistics,
    constants: &Constants,
) -> Result<CostVector, CostError> {
    let plan = plan_query(model, query, settings, stats)?;
    let mut total = CostVector::ZERO;
    let mut output = 1.0;
    for step in &plan.steps {
        let volumes = filter_volumes(&step.access(), &step.strategy, settings, stats, query)?;
        total += dimension_costs(&volumes, constants) * output;
        output *= step.matches();
    }
    Ok(total)
}

/// Per-query costs in workload order; errors name the failing query.
pub fn query_costs(
    model: &DataModel,
    queries: &[Query],
    settings: &Settings,
    stats: &Statistics,
    constants: &Constants,
) -> Result<Vec<CostVector>, CostError> {
    queries
        .iter()
        .map(|q| {
            query_cost(model, q, settings, stats, constants)
                .map_err(|e| CostError::Query { query: q.id.clone(), source: Box::new(e) })
        })
        .collect()
}

/// Daily cost of a model: the static cluster cost plus every query cost
/// weighted by its daily occurrences.
pub fn total_cost(
    model: &DataModel,
    queries: &[Query],
    settings: &Settings,
    stats: &Statistics,
    constants: &Constants,
) -> Result<CostVector, CostError> {
    let costs = query_costs(model, queries, settings, stats, constants)?;
    Ok(static_cost(settings, constants)
        + queries.iter().zip(costs).map(|(q, c)| c * q.occurrences).sum())
}
