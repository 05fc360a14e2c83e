//! Candidate models derived from a normalized root by merges and splits.
//!
//! [`generate`] explores refinements breadth first. To keep one path per
//! model and stay close to the models a workload can use, it follows four
//! rules:
//!
//! * every model is kept once, identified by its canonical form;
//! * a refinement never returns to a model on its own ancestry;
//! * a row is split only while none of its fragments took part in a merge,
//!   only its last fragment is split again, always on its lowest remaining
//!   key, and only when some query touches exactly one side of the split;
//! * a model is retained when one of its rows can answer a query alone
//!   (the root is always retained). Models that fail this test are still
//!   refined further.

mod manifest;
mod ops;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{validate, DataModel, KeyKind, MergeDirection, Row, RowId};
use crate::workload::Query;

pub use manifest::{read_manifest, write_manifest, ManifestError};
pub use ops::{merge, merge_inverse, split, split_inverse};

/// One refinement, described with the labels of the parent model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum StepKind {
    Merge { reference: String, direction: MergeDirection },
    Split { row: String, key: String },
}

impl StepKind {
    pub fn describe(&self) -> String {
        match self {
            StepKind::Merge { reference, direction } => {
                let d = match direction {
                    MergeDirection::NestSourceIntoTarget => "source-into-target",
                    MergeDirection::NestTargetIntoSource => "target-into-source",
                };
                format!("merge {reference} {d}")
            }
            StepKind::Split { row, key } => format!("split {row} {key}"),
        }
    }
}

/// Edge of the generation tree, between model names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefinementStep {
    pub parent: String,
    pub child: String,
    pub kind: StepKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratedModel {
    /// `M<n>` in discovery order; the root is `M0`.
    pub name: String,
    pub signature: String,
    pub canonical: String,
    pub parent: Option<String>,
    pub step: Option<StepKind>,
    pub retained: bool,
    #[serde(skip)]
    pub model: DataModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationResult {
    /// Every explored model in breadth-first discovery order.
    pub nodes: Vec<GeneratedModel>,
    pub pruned_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("root model is invalid: {0}")]
    InvalidRoot(String),
    #[error("root model must be normalized: {0}")]
    NotNormalized(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("no generated model matches `{0}`")]
    Unknown(String),
    #[error("`{0}` matches several models: {1}")]
    Ambiguous(String, String),
}

impl GenerationResult {
    pub fn retained(&self) -> impl Iterator<Item = &GeneratedModel> {
        self.nodes.iter().filter(|n| n.retained)
    }

    /// Compact signatures of the retained models.
    pub fn signatures(&self) -> BTreeSet<String> {
        self.retained().map(|n| n.signature.clone()).collect()
    }

    /// Retained models keyed by canonical form.
    pub fn models(&self) -> BTreeMap<&str, &DataModel> {
        self.retained().map(|n| (n.canonical.as_str(), &n.model)).collect()
    }

    pub fn tree(&self) -> Vec<RefinementStep> {
        self.nodes
            .iter()
            .filter_map(|n| {
                Some(RefinementStep {
                    parent: n.parent.clone()?,
                    child: n.name.clone(),
                    kind: n.step.clone()?,
                })
            })
            .collect()
    }

    /// Finds a retained model by name (`M12`), canonical form or compact
    /// signature. A compact signature shared by several models is ambiguous.
    pub fn find(&self, selector: &str) -> Result<&GeneratedModel, LookupError> {
        if let Some(n) = self.retained().find(|n| n.name == selector || n.canonical == selector) {
            return Ok(n);
        }
        let hits: Vec<&GeneratedModel> = self.retained().filter(|n| n.signature == selector).collect();
        match hits.as_slice() {
            [] => Err(LookupError::Unknown(selector.to_string())),
            [one] => Ok(one),
            many => Err(LookupError::Ambiguous(
                selector.to_string(),
                many.iter().map(|n| n.name.as_str()).collect::<Vec<_>>().join(", "),
            )),
        }
    }
}

/// Explores the refinements of `root` guided by `queries`. The result does
/// not depend on thread scheduling.
pub fn generate(root: &DataModel, queries: &[Query]) -> Result<GenerationResult, GenerateError> {
    let report = validate(root);
    if !report.is_ok() {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(GenerateError::InvalidRoot(msgs.join("; ")));
    }
    if let Some(r) = root.rows().find(|r| r.has_nested()) {
        return Err(GenerateError::NotNormalized(format!("row `{}` has nested rows", r.origin.row)));
    }
    if let Some((origin, _)) = root.lineages().into_iter().find(|(_, ids)| ids.len() > 1) {
        return Err(GenerateError::NotNormalized(format!("row `{origin}` is split")));
    }

    let mut nodes = vec![GeneratedModel {
        name: "M0".into(),
        signature: root.signature(),
        canonical: root.canonical_form(),
        parent: None,
        step: None,
        retained: true,
        model: root.clone(),
    }];
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    seen.insert(nodes[0].canonical.clone(), 0);
    let mut frontier = vec![0usize];

    while !frontier.is_empty() {
        let expanded: Vec<Vec<(StepKind, DataModel)>> =
            frontier.par_iter().map(|&i| refinements(&nodes[i].model, queries)).collect();
        let mut next = Vec::new();
        for (&parent, children) in frontier.iter().zip(expanded) {
            let ancestry = ancestors(&nodes, parent);
            for (step, model) in children {
                let canonical = model.canonical_form();
                if ancestry.contains(&canonical) || seen.contains_key(&canonical) {
                    continue;
                }
                let index = nodes.len();
                seen.insert(canonical.clone(), index);
                nodes.push(GeneratedModel {
                    name: format!("M{index}"),
                    signature: model.signature(),
                    canonical,
                    parent: Some(nodes[parent].name.clone()),
                    step: Some(step),
                    retained: serves_a_query(&model, queries),
                    model,
                });
                next.push(index);
            }
        }
        frontier = next;
    }
    let pruned_count = nodes.iter().filter(|n| !n.retained).count();
    Ok(GenerationResult { nodes, pruned_count })
}

fn ancestors(nodes: &[GeneratedModel], mut index: usize) -> BTreeSet<String> {
    let by_name: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
    let mut out = BTreeSet::new();
    loop {
        out.insert(nodes[index].canonical.clone());
        match &nodes[index].parent {
            Some(p) => index = by_name[p.as_str()],
            None => return out,
        }
    }
}

/// True when some row of `model` holds every key of some query.
pub fn serves_a_query(model: &DataModel, queries: &[Query]) -> bool {
    let available: Vec<BTreeSet<String>> = model.rows().map(Row::available_keys).collect();
    queries.iter().any(|q| {
        let keys = q.key_set();
        available.iter().any(|a| keys.is_subset(a))
    })
}

/// True when some query touches the row's non-primary keys on one side of
/// a split on `key` only.
pub fn split_is_targeted(row_keys: &BTreeSet<String>, key: &str, queries: &[Query]) -> bool {
    queries.iter().any(|q| {
        let keys = q.key_set();
        let mut touched = row_keys.iter().filter(|k| keys.contains(*k)).peekable();
        if touched.peek().is_none() {
            return false;
        }
        let sides: BTreeSet<bool> = touched.map(|k| k == key).collect();
        sides.len() == 1
    })
}

/// Every refinement the rules allow from `model`, in a fixed order.
fn refinements(model: &DataModel, queries: &[Query]) -> Vec<(StepKind, DataModel)> {
    let mut out = Vec::new();
    let ordered = model.ordered_rows();

    for ids in model.lineages().values() {
        let touched = ids.iter().any(|id| {
            !model.is_top_level(*id) || model.row(*id).is_some_and(Row::has_nested)
        });
        if touched {
            continue;
        }
        let last = ordered.iter().rev().find(|r| ids.contains(&r.id)).expect("lineage rows are top-level");
        if !last.is_split_candidate() {
            continue;
        }
        let Some(key) = last
            .keys
            .iter()
            .filter(|k| k.name != last.primary_key && matches!(k.kind, KeyKind::Atomic))
            .min_by_key(|k| k.rank)
        else {
            continue;
        };
        let row_keys: BTreeSet<String> =
            last.non_primary_keys().map(|k| k.name.clone()).collect();
        if !split_is_targeted(&row_keys, &key.name, queries) {
            continue;
        }
        if let Ok(child) = split(model, last.id, &key.name) {
            out.push((StepKind::Split { row: model.label(last.id), key: key.name.clone() }, child));
        }
    }

    for reference in &model.references {
        let (s, t) = (reference.source.row, reference.target.row);
        if s == t || !model.is_top_level(s) || !model.is_top_level(t) {
            continue;
        }
        for direction in [MergeDirection::NestSourceIntoTarget, MergeDirection::NestTargetIntoSource] {
            if let Ok(child) = merge(model, reference, direction) {
                out.push((
                    StepKind::Merge { reference: model.describe_reference(reference), direction },
                    child,
                ));
            }
        }
    }
    out
}

/// Applies a step described with the labels of `model`.
pub fn apply_step(model: &DataModel, step: &StepKind) -> Result<DataModel, String> {
    match step {
        StepKind::Split { row, key } => {
            let id: RowId = model.row_by_label(row).ok_or_else(|| format!("no row `{row}`"))?;
            split(model, id, key).map_err(|e| e.to_string())
        }
        StepKind::Merge { reference, direction } => {
            let r = model
                .references
                .iter()
                .find(|r| &model.describe_reference(r) == reference)
                .ok_or_else(|| format!("no reference `{reference}`"))?
                .clone();
            merge(model, &r, *direction).map_err(|e| e.to_string())
        }
    }
}
