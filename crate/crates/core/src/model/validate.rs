use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{DataModel, KeyKind, Multiplicity, Row, RowId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    DanglingReference,
    SelfReference,
    NonPositiveCardinality,
    CyclicNesting,
    DuplicateRow,
    MissingPrimaryKey,
    ComplexPrimaryKey,
    DuplicateKey,
    NonPositiveMultiplicity,
    EmptyConcept,
}

impl ViolationKind {
    fn text(&self) -> &'static str {
        match self {
            ViolationKind::DanglingReference => "dangling reference",
            ViolationKind::SelfReference => "self reference",
            ViolationKind::NonPositiveCardinality => "non-positive cardinality",
            ViolationKind::CyclicNesting => "cyclic nesting",
            ViolationKind::DuplicateRow => "duplicate row",
            ViolationKind::MissingPrimaryKey => "missing primary key",
            ViolationKind::ComplexPrimaryKey => "complex primary key",
            ViolationKind::DuplicateKey => "duplicate key",
            ViolationKind::NonPositiveMultiplicity => "non-positive multiplicity",
            ViolationKind::EmptyConcept => "empty concept",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// The offending element (row, key or reference).
    pub element: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.text(), self.element)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Checks the structural invariants of a model. Never fails; an empty report
/// means the model is well formed.
pub fn validate(model: &DataModel) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |kind, element: String| out.push(Violation { kind, element });

    for c in &model.concepts {
        if c.rows.is_empty() {
            push(ViolationKind::EmptyConcept, c.name.clone());
        }
    }

    let mut seen = BTreeSet::new();
    for row in model.rows() {
        check_row(row, &mut Vec::new(), &mut seen, &mut push);
    }

    for r in &model.references {
        let name = format!("{}.{} -> {}.{}", r.source.row.0, r.source.key, r.target.row.0, r.target.key);
        let resolves = |id: RowId, key: &str| model.row(id).is_some_and(|row| row.has_atomic(key));
        if !resolves(r.source.row, &r.source.key) || !resolves(r.target.row, &r.target.key) {
            push(ViolationKind::DanglingReference, name.clone());
        }
        if r.source == r.target {
            push(ViolationKind::SelfReference, name.clone());
        }
        if !(r.cardinality > 0.0) {
            push(ViolationKind::NonPositiveCardinality, name);
        }
    }
    ValidationReport { violations: out }
}

fn check_row(
    row: &Row,
    ancestors: &mut Vec<RowId>,
    seen: &mut BTreeSet<RowId>,
    push: &mut dyn FnMut(ViolationKind, String),
) {
    let name = format!("{}#{}", row.origin.row, row.id.0);
    if ancestors.contains(&row.id) {
        push(ViolationKind::CyclicNesting, name);
        return;
    }
    if !seen.insert(row.id) {
        push(ViolationKind::DuplicateRow, name.clone());
    }
    match row.keys.iter().find(|k| k.name == row.primary_key) {
        None => push(ViolationKind::MissingPrimaryKey, name.clone()),
        Some(k) if !matches!(k.kind, KeyKind::Atomic) => {
            push(ViolationKind::ComplexPrimaryKey, name.clone())
        }
        Some(_) => {}
    }
    let mut names = BTreeSet::new();
    for k in &row.keys {
        if !names.insert(k.name.as_str()) {
            push(ViolationKind::DuplicateKey, format!("{name}.{}", k.name));
        }
    }
    ancestors.push(row.id);
    for nested in row.nested() {
        if let Multiplicity::OneToMany(avg) = nested.multiplicity {
            if !(avg > 0.0) {
                push(ViolationKind::NonPositiveMultiplicity, format!("{name}.{}", nested.row.origin.row));
            }
        }
        check_row(&nested.row, ancestors, seen, push);
    }
    ancestors.pop();
}
