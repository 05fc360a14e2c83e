//! Tab-separated manifest of a generation run.
//!
//! One line per explored model: name, compact signature, canonical form,
//! parent name, refinement step and whether the model is retained. Lines
//! appear in discovery order, so a parent always precedes its children and
//! the manifest can be replayed from the root.

use thiserror::Error;

use super::{apply_step, GeneratedModel, GenerationResult, StepKind};
use crate::model::{DataModel, MergeDirection};

const HEADER: &str = "# name\tsignature\tcanonical\tparent\tstep\tretained";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("manifest line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("manifest is empty")]
    Empty,
}

pub fn write_manifest(result: &GenerationResult) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for n in &result.nodes {
        let line = [
            n.name.as_str(),
            n.signature.as_str(),
            n.canonical.as_str(),
            n.parent.as_deref().unwrap_or("-"),
            &n.step.as_ref().map_or("-".to_string(), StepKind::describe),
            if n.retained { "yes" } else { "no" },
        ]
        .join("\t");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn parse_step(text: &str) -> Result<Option<StepKind>, String> {
    let parts: Vec<&str> = text.split(' ').collect();
    match parts.as_slice() {
        ["-"] => Ok(None),
        ["split", row, key] => Ok(Some(StepKind::Split { row: row.to_string(), key: key.to_string() })),
        ["merge", reference, dir] => {
            let direction = match *dir {
                "source-into-target" => MergeDirection::NestSourceIntoTarget,
                "target-into-source" => MergeDirection::NestTargetIntoSource,
                other => return Err(format!("unknown merge direction `{other}`")),
            };
            Ok(Some(StepKind::Merge { reference: reference.to_string(), direction }))
        }
        _ => Err(format!("cannot parse step `{text}`")),
    }
}

/// Rebuilds a generation result by replaying every step from `root`. Each
/// replayed model must match the canonical form recorded on its line.
pub fn read_manifest(text: &str, root: &DataModel) -> Result<GenerationResult, ManifestError> {
    let mut nodes: Vec<GeneratedModel> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ManifestError::Line { line, message };
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        let [name, signature, canonical, parent, step, retained] = fields.as_slice() else {
            return Err(err(format!("expected 6 tab-separated fields, found {}", fields.len())));
        };
        let step = parse_step(step).map_err(err)?;
        let retained = match *retained {
            "yes" => true,
            "no" => false,
            other => return Err(err(format!("retained must be yes or no, got `{other}`"))),
        };
        let model = match (*parent, &step) {
            ("-", None) => {
                if !nodes.is_empty() {
                    return Err(err("only the first model may be a root".into()));
                }
                root.clone()
            }
            (p, Some(s)) => {
                let parent = nodes
                    .iter()
                    .find(|n| n.name == p)
                    .ok_or_else(|| err(format!("parent `{p}` is not listed before this line")))?;
                apply_step(&parent.model, s).map_err(err)?
            }
            _ => return Err(err("parent and step must both be set or both be `-`".into())),
        };
        if model.canonical_form() != *canonical {
            return Err(err(format!("replayed model does not match `{canonical}`")));
        }
        nodes.push(GeneratedModel {
            name: name.to_string(),
            signature: signature.to_string(),
            canonical: canonical.to_string(),
            parent: (*parent != "-").then(|| parent.to_string()),
            step,
            retained,
            model,
        });
    }
    if nodes.is_empty() {
        return Err(ManifestError::Empty);
    }
    let pruned_count = nodes.iter().filter(|n| !n.retained).count();
    Ok(GenerationResult { nodes, pruned_count })
}
