//! Logical data models built from concepts, rows, keys and references.
//!
//! A [`DataModel`] starts out normalized: every row is top-level and every key
//! is atomic. Merges turn a row into a complex key of another row, splits
//! divide a row into fragments sharing its primary key. Rows keep the identity
//! of the root row they descend from (their [`Origin`]), which drives naming
//! (`C1`, `C2`, ...), document counts and canonical ordering.

mod signature;
mod sizing;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sizing::{document_count, document_size, projected_size, storage_volume, SizeProfile};
pub use validate::{validate, ValidationReport, Violation, ViolationKind};

/// Identifier of a row inside one model. Not part of the structure: two
/// models with different ids but the same layout have the same canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowId(pub u32);

/// The root row a row (or fragment) descends from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub concept: String,
    pub concept_rank: u32,
    pub row: String,
    pub row_rank: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub id: RowId,
    pub origin: Origin,
    pub keys: Vec<KeyValue>,
    pub primary_key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyValue {
    pub name: String,
    /// Declaration position inside the root row; complex keys carry the
    /// nested row's origin rank.
    pub rank: u32,
    pub kind: KeyKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KeyKind {
    Atomic,
    Complex(Box<Nested>),
}

/// A row nested inside another row by a merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nested {
    pub row: Row,
    pub multiplicity: Multiplicity,
    pub merge: MergeRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Multiplicity {
    OneToOne,
    /// Average number of nested instances per host instance.
    OneToMany(f64),
}

impl Multiplicity {
    pub fn average(&self) -> f64 {
        match self {
            Multiplicity::OneToOne => 1.0,
            Multiplicity::OneToMany(avg) => *avg,
        }
    }
}

/// What a merge consumed, so that it can be undone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub reference: Reference,
    pub direction: MergeDirection,
    /// The referencing key dropped by the merge and the row it was dropped from.
    pub removed: Option<RemovedKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedKey {
    pub row: RowId,
    pub key: KeyValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MergeDirection {
    /// The referencing (many) side becomes an array inside the referenced row.
    NestSourceIntoTarget,
    /// The referenced (one) side is copied into every referencing row.
    NestTargetIntoSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub row: RowId,
    pub key: String,
}

/// `source.key` references `target.key`; `cardinality` is the average number
/// of source instances per target instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub source: Endpoint,
    pub target: Endpoint,
    pub cardinality: f64,
}

/// Graph edge between concepts. Carried for completeness; nothing produces them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub name: String,
    pub rank: u32,
    /// Top-level rows only; nested rows live inside their host's keys.
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataModel {
    pub name: String,
    pub concepts: Vec<Concept>,
    pub references: Vec<Reference>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("no size configured for key `{0}`")]
    MissingKeySize(String),
    #[error("no document count configured for row lineage `{0}`")]
    UnknownLineage(String),
    #[error("row `{0}` not found")]
    RowNotFound(String),
    #[error("row `{0}` is nested; only top-level rows can be refined")]
    NotTopLevel(String),
    #[error("key `{key}` not found in row `{row}`")]
    KeyNotFound { row: String, key: String },
    #[error("reference {0} not found")]
    ReferenceNotFound(String),
    #[error("reference {0} links a row to itself")]
    SelfReference(String),
    #[error("merge would nest `{0}` inside itself")]
    CyclicNesting(String),
    #[error("row `{0}` is not a complex key created by a merge")]
    NotComplex(String),
    #[error("key `{key}` of row `{row}` is the primary key and cannot be split")]
    PrimaryKeySplit { row: String, key: String },
    #[error("key `{key}` of row `{row}` is complex and cannot be split")]
    ComplexKeySplit { row: String, key: String },
    #[error("splitting `{key}` would leave row `{row}` with only its primary key")]
    EmptyFragment { row: String, key: String },
    #[error("rows `{0}` and `{1}` are not fragments of the same row")]
    NotCoLineal(String, String),
}

/// Builder used by configuration loading and tests to assemble a normalized model.
#[derive(Debug, Default)]
pub struct ModelBuilder {
    name: String,
    concepts: Vec<Concept>,
    references: Vec<(String, String, String, String, f64)>,
    next_id: u32,
    next_row_rank: u32,
}

impl ModelBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ModelBuilder { name: name.into(), ..Default::default() }
    }

    /// Adds a row with atomic keys; the first key named `primary_key` becomes
    /// the primary key. Rows are grouped into concepts in declaration order.
    pub fn row(mut self, concept: &str, row: &str, primary_key: &str, keys: &[&str]) -> Self {
        let concept_rank = match self.concepts.iter().position(|c| c.name == concept) {
            Some(i) => i,
            None => {
                let rank = self.concepts.len() as u32;
                self.concepts.push(Concept { name: concept.to_string(), rank, rows: Vec::new() });
                rank as usize
            }
        };
        let origin = Origin {
            concept: concept.to_string(),
            concept_rank: concept_rank as u32,
            row: row.to_string(),
            row_rank: self.next_row_rank,
        };
        self.next_row_rank += 1;
        let keys = keys
            .iter()
            .enumerate()
            .map(|(i, k)| KeyValue { name: k.to_string(), rank: i as u32, kind: KeyKind::Atomic })
            .collect();
        let id = RowId(self.next_id);
        self.next_id += 1;
        self.concepts[concept_rank].rows.push(Row {
            id,
            origin,
            keys,
            primary_key: primary_key.to_string(),
        });
        self
    }

    /// `source_row.source_key` references `target_row.target_key`.
    pub fn reference(
        mut self,
        source_row: &str,
        source_key: &str,
        target_row: &str,
        target_key: &str,
        cardinality: f64,
    ) -> Self {
        self.references.push((
            source_row.to_string(),
            source_key.to_string(),
            target_row.to_string(),
            target_key.to_string(),
            cardinality,
        ));
        self
    }

    pub fn build(self) -> Result<DataModel, ModelError> {
        let find = |concepts: &[Concept], name: &str| {
            concepts
                .iter()
                .flat_map(|c| c.rows.iter())
                .find(|r| r.origin.row == name)
                .map(|r| r.id)
                .ok_or_else(|| ModelError::RowNotFound(name.to_string()))
        };
        let mut references = Vec::new();
        for (sr, sk, tr, tk, cardinality) in &self.references {
            references.push(Reference {
                source: Endpoint { row: find(&self.concepts, sr)?, key: sk.clone() },
                target: Endpoint { row: find(&self.concepts, tr)?, key: tk.clone() },
                cardinality: *cardinality,
            });
        }
        Ok(DataModel { name: self.name, concepts: self.concepts, references, edges: Vec::new() })
    }
}

impl Row {
    pub fn atomic_keys(&self) -> impl Iterator<Item = &KeyValue> {
        self.keys.iter().filter(|k| matches!(k.kind, KeyKind::Atomic))
    }

    pub fn nested(&self) -> impl Iterator<Item = &Nested> {
        self.keys.iter().filter_map(|k| match &k.kind {
            KeyKind::Complex(n) => Some(n.as_ref()),
            KeyKind::Atomic => None,
        })
    }

    pub fn has_key(&self, name: &str) -> bool {
        self.keys.iter().any(|k| k.name == name)
    }

    pub fn has_atomic(&self, name: &str) -> bool {
        self.atomic_keys().any(|k| k.name == name)
    }

    /// Non-primary keys, atomic or complex.
    pub fn non_primary_keys(&self) -> impl Iterator<Item = &KeyValue> {
        self.keys.iter().filter(move |k| k.name != self.primary_key)
    }

    pub fn is_split_candidate(&self) -> bool {
        self.non_primary_keys().count() >= 2
    }

    /// Atomic key names of this row and of every row nested in it.
    pub fn deep_atomic_keys(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |r| {
            out.extend(r.atomic_keys().map(|k| k.name.clone()));
        });
        out
    }

    /// Keys a query can rely on when reading this row: every atomic key in the
    /// subtree plus the referencing keys that merges folded into the nesting.
    pub fn available_keys(&self) -> BTreeSet<String> {
        let mut out = self.deep_atomic_keys();
        self.visit(&mut |r| {
            for n in r.nested() {
                if let Some(removed) = &n.merge.removed {
                    out.insert(removed.key.name.clone());
                }
            }
        });
        out
    }

    pub fn has_nested(&self) -> bool {
        self.nested().next().is_some()
    }

    /// Pre-order traversal of this row and its nested rows.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Row)) {
        f(self);
        for n in self.nested() {
            n.row.visit(f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Row)) {
        f(self);
        for k in self.keys.iter_mut() {
            if let KeyKind::Complex(n) = &mut k.kind {
                n.row.visit_mut(f);
            }
        }
    }

    /// Inserts an atomic key keeping atomics ordered by rank ahead of complex keys.
    pub(crate) fn insert_atomic(&mut self, key: KeyValue) {
        let pos = self
            .keys
            .iter()
            .position(|k| !matches!(k.kind, KeyKind::Atomic) || k.rank > key.rank)
            .unwrap_or(self.keys.len());
        self.keys.insert(pos, key);
    }
}

impl DataModel {
    /// Top-level rows in storage order.
    pub fn rows(&self) -> impl Iterator<Item = &Row> {
        self.concepts.iter().flat_map(|c| c.rows.iter())
    }

    /// Every row, nested ones included, in pre-order.
    pub fn all_rows(&self) -> Vec<&Row> {
        let mut out = Vec::new();
        for r in self.rows() {
            r.visit(&mut |row| out.push(row));
        }
        out
    }

    pub fn row(&self, id: RowId) -> Option<&Row> {
        self.all_rows().into_iter().find(|r| r.id == id)
    }

    pub(crate) fn row_mut(&mut self, id: RowId) -> Option<&mut Row> {
        let mut path: Option<Vec<usize>> = None;
        for (ci, c) in self.concepts.iter().enumerate() {
            for (ri, r) in c.rows.iter().enumerate() {
                if let Some(p) = find_path(r, id) {
                    let mut full = vec![ci, ri];
                    full.extend(p);
                    path = Some(full);
                }
            }
        }
        let path = path?;
        let mut row = &mut self.concepts[path[0]].rows[path[1]];
        for &ki in &path[2..] {
            row = match &mut row.keys[ki].kind {
                KeyKind::Complex(n) => &mut n.row,
                KeyKind::Atomic => unreachable!("path only follows complex keys"),
            };
        }
        Some(row)
    }

    pub fn is_top_level(&self, id: RowId) -> bool {
        self.rows().any(|r| r.id == id)
    }

    /// The top-level row whose subtree contains `id`.
    pub fn host_of(&self, id: RowId) -> Option<&Row> {
        self.rows().find(|r| {
            let mut hit = false;
            r.visit(&mut |row| hit |= row.id == id);
            hit
        })
    }

    pub(crate) fn next_row_id(&self) -> RowId {
        let max = self.all_rows().iter().map(|r| r.id.0).max();
        RowId(max.map_or(0, |m| m + 1))
    }

    pub(crate) fn for_each_row_mut(&mut self, f: &mut dyn FnMut(&mut Row)) {
        for c in self.concepts.iter_mut() {
            for r in c.rows.iter_mut() {
                r.visit_mut(f);
            }
        }
    }

    /// Removes a top-level row, dropping its concept when it becomes empty.
    pub(crate) fn take_top_level(&mut self, id: RowId) -> Option<Row> {
        for ci in 0..self.concepts.len() {
            if let Some(ri) = self.concepts[ci].rows.iter().position(|r| r.id == id) {
                let row = self.concepts[ci].rows.remove(ri);
                if self.concepts[ci].rows.is_empty() {
                    self.concepts.remove(ci);
                }
                return Some(row);
            }
        }
        None
    }

    /// Places a row at top level under its origin concept.
    pub(crate) fn put_top_level(&mut self, row: Row) {
        let rank = row.origin.concept_rank;
        let ci = match self.concepts.iter().position(|c| c.rank == rank) {
            Some(ci) => ci,
            None => {
                let pos = self.concepts.iter().position(|c| c.rank > rank).unwrap_or(self.concepts.len());
                self.concepts.insert(
                    pos,
                    Concept { name: row.origin.concept.clone(), rank, rows: Vec::new() },
                );
                pos
            }
        };
        self.concepts[ci].rows.push(row);
    }

    /// Merge records of every complex key in the model.
    pub fn merge_records(&self) -> Vec<&MergeRecord> {
        let mut out = Vec::new();
        for r in self.all_rows() {
            out.extend(r.nested().map(|n| &n.merge));
        }
        out
    }

    /// Ranks of the non-primary keys a fragment owns, counting keys that a
    /// merge removed from it.
    pub fn owned_ranks(&self, id: RowId) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        if let Some(row) = self.row(id) {
            out.extend(
                row.atomic_keys().filter(|k| k.name != row.primary_key).map(|k| k.rank),
            );
        }
        for m in self.merge_records() {
            if let Some(removed) = &m.removed {
                if removed.row == id {
                    out.insert(removed.key.rank);
                }
            }
        }
        out
    }

    /// Rows sharing a root row, keyed by origin name.
    pub fn lineages(&self) -> BTreeMap<String, Vec<RowId>> {
        let mut out: BTreeMap<String, Vec<RowId>> = BTreeMap::new();
        for r in self.all_rows() {
            out.entry(r.origin.row.clone()).or_default().push(r.id);
        }
        out
    }

    /// Finds a row by its display label (`C2`, `O`, ...).
    pub fn row_by_label(&self, label: &str) -> Option<RowId> {
        self.labels().into_iter().find(|(_, l)| l == label).map(|(id, _)| id)
    }

    pub fn label(&self, id: RowId) -> String {
        self.labels().remove(&id).unwrap_or_else(|| format!("#{}", id.0))
    }

    /// Index of a reference equal to `reference`, if any.
    pub fn reference_index(&self, reference: &Reference) -> Option<usize> {
        self.references.iter().position(|r| r == reference)
    }
}

fn find_path(row: &Row, id: RowId) -> Option<Vec<usize>> {
    if row.id == id {
        return Some(Vec::new());
    }
    for (ki, k) in row.keys.iter().enumerate() {
        if let KeyKind::Complex(n) = &k.kind {
            if let Some(mut p) = find_path(&n.row, id) {
                p.insert(0, ki);
                return Some(p);
            }
        }
    }
    None
}
