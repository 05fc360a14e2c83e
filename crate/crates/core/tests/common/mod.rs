#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use mdcost::generator::{merge, split};
use mdcost::model::{DataModel, KeyKind, MergeDirection, ModelBuilder, Reference, RowId};
use mdcost::workload::{Query, QueryKind};
use proptest::prelude::*;

pub const REFERENCE_MODELS: [(&str, &str); 7] = [
    ("M0", "W,C,O"),
    ("M3", "W,C1,C2,C3,O1,O2"),
    ("M16", "C1,C2,C3{W,O}"),
    ("M24", "C1,C2{W,O}"),
    ("M30", "W,C{O}"),
    ("M33", "W,O{C}"),
    ("M35", "O{C{W}}"),
];

pub fn query(id: &str, filter: &[&str], projection: &[&str], join: &[&str]) -> Query {
    let v = |s: &[&str]| s.iter().map(|k| k.to_string()).collect::<Vec<_>>();
    Query {
        id: id.into(),
        kind: if join.is_empty() { QueryKind::Filter } else { QueryKind::Join },
        filter_keys: v(filter),
        projection_keys: v(projection),
        join_keys: v(join),
        sharded_keys: vec![],
        occurrences: 1.0,
        latency_bound: 1.0,
        message_size: None,
    }
}

/// Two concepts, one reference, two attributes each.
pub fn pair_schema() -> (DataModel, Vec<Query>) {
    let root = ModelBuilder::new("pair")
        .row("Alpha", "A", "a_id", &["a_id", "a1", "a2"])
        .row("Beta", "B", "b_id", &["b_id", "b1", "b2", "b_a"])
        .reference("B", "b_a", "A", "a_id", 3.0)
        .build()
        .unwrap();
    let queries = vec![
        query("qa", &["a1"], &["a1"], &[]),
        query("qb", &["b2"], &["a2"], &["b_a", "a_id"]),
    ];
    (root, queries)
}

/// Every model reachable from `root` by any sequence of merges and splits,
/// deduplicated by canonical form.
pub fn free_closure(root: &DataModel) -> BTreeMap<String, DataModel> {
    let mut seen = BTreeMap::new();
    let mut queue = VecDeque::from([root.clone()]);
    seen.insert(root.canonical_form(), root.clone());
    while let Some(m) = queue.pop_front() {
        for child in all_steps(&m) {
            if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(child.canonical_form()) {
                e.insert(child.clone());
                queue.push_back(child);
            }
        }
    }
    seen
}

/// Every merge and split the operators accept on `m`.
pub fn all_steps(m: &DataModel) -> Vec<DataModel> {
    let mut out = Vec::new();
    for r in &m.references {
        for d in [MergeDirection::NestSourceIntoTarget, MergeDirection::NestTargetIntoSource] {
            if let Ok(c) = merge(m, r, d) {
                out.push(c);
            }
        }
    }
    for row in m.rows() {
        for k in row.keys.iter().filter(|k| matches!(k.kind, KeyKind::Atomic)) {
            if let Ok(c) = split(m, row.id, &k.name) {
                out.push(c);
            }
        }
    }
    out
}

fn touches(q: &Query, remaining: &BTreeSet<String>, key: &str) -> bool {
    let hit: Vec<String> = q.required_keys().into_iter().filter(|k| remaining.contains(k)).collect();
    !hit.is_empty() && (hit.iter().all(|k| k == key) || hit.iter().all(|k| k != key))
}

/// Model-level form of the generation rules: every split row is cut into
/// single-key fragments for its lowest keys plus one last fragment holding
/// the rest (at least one key) and the references on its primary key; each
/// cut was wanted by a query; some row answers a query alone unless the model
/// is the root.
pub fn admissible(m: &DataModel, root: &DataModel, queries: &[Query]) -> bool {
    let merged_refs: Vec<Reference> =
        m.merge_records().into_iter().map(|r| r.reference.clone()).collect();
    for (origin, ids) in m.lineages() {
        if ids.len() < 2 {
            continue;
        }
        let base = root.rows().find(|r| r.origin.row == origin).unwrap();
        let ranks: Vec<u32> =
            base.keys.iter().filter(|k| k.name != base.primary_key).map(|k| k.rank).collect();
        let name_of = |rank: u32| base.keys.iter().find(|k| k.rank == rank).unwrap().name.clone();
        let mut frags: Vec<(RowId, BTreeSet<u32>)> = ids.iter().map(|id| (*id, m.owned_ranks(*id))).collect();
        frags.sort_by_key(|(_, owned)| owned.iter().next().copied().unwrap_or(u32::MAX));
        let cuts = frags.len() - 1;
        for (i, (_, owned)) in frags.iter().enumerate().take(cuts) {
            if owned.len() != 1 || *owned.iter().next().unwrap() != ranks[i] {
                return false;
            }
        }
        let last = frags[cuts].0;
        let rest: BTreeSet<u32> = ranks[cuts..].iter().copied().collect();
        if rest.is_empty() || frags[cuts].1 != rest {
            return false;
        }
        for r in m.references.iter().chain(&merged_refs) {
            for end in [&r.source, &r.target] {
                if ids.contains(&end.row) && end.key == base.primary_key && end.row != last {
                    return false;
                }
            }
        }
        for j in 0..cuts {
            let remaining: BTreeSet<String> = ranks[j..].iter().map(|r| name_of(*r)).collect();
            let key = name_of(ranks[j]);
            if !queries.iter().any(|q| touches(q, &remaining, &key)) {
                return false;
            }
        }
    }
    if m.canonical_form() == root.canonical_form() {
        return true;
    }
    m.rows().any(|row| {
        let avail = row.available_keys();
        queries.iter().any(|q| q.required_keys().iter().all(|k| avail.contains(k)))
    })
}

/// Canonical forms the brute-force search keeps.
pub fn oracle_set(root: &DataModel, queries: &[Query]) -> BTreeSet<String> {
    free_closure(root)
        .into_iter()
        .filter(|(_, m)| admissible(m, root, queries))
        .map(|(form, _)| form)
        .collect()
}

/// Small random schema: 2 or 3 rows with up to 3 attributes, references on
/// fresh foreign keys, then a random walk of merges and splits.
pub fn small_model() -> impl Strategy<Value = DataModel> {
    (
        2usize..=3,
        prop::collection::vec(1usize..=3, 3),
        prop::collection::vec((0usize..3, 0usize..3, 1.0f64..50.0), 0..=3),
        prop::collection::vec(any::<u16>(), 0..=4),
    )
        .prop_map(|(n, attrs, refs, walk)| {
            let names: Vec<Vec<String>> = (0..n)
                .map(|i| {
                    let mut keys = vec![format!("r{i}_id")];
                    keys.extend((0..attrs[i]).map(|j| format!("r{i}_a{j}")));
                    for (s, t, _) in &refs {
                        let (s, t) = (s % n, t % n);
                        let fk = format!("r{i}_fk{t}");
                        if s == i && s != t && !keys.contains(&fk) {
                            keys.push(fk);
                        }
                    }
                    keys
                })
                .collect();
            let mut b = ModelBuilder::new("rand");
            for (i, keys) in names.iter().enumerate() {
                let refs: Vec<&str> = keys.iter().map(String::as_str).collect();
                b = b.row(&format!("Concept{i}"), &format!("R{i}"), &keys[0], &refs);
            }
            let mut linked = BTreeSet::new();
            for (s, t, card) in &refs {
                let (s, t) = (s % n, t % n);
                if s != t && linked.insert((s, t)) {
                    b = b.reference(
                        &format!("R{s}"),
                        &format!("r{s}_fk{t}"),
                        &format!("R{t}"),
                        &format!("r{t}_id"),
                        card.round(),
                    );
                }
            }
            let mut m = b.build().unwrap();
            for step in walk {
                let options = all_steps(&m);
                if options.is_empty() {
                    break;
                }
                m = options[step as usize % options.len()].clone();
            }
            m
        })
}

/// Keys of every row, nested ones included, per label.
pub fn key_sets(m: &DataModel) -> BTreeMap<String, BTreeSet<String>> {
    let labels = m.labels();
    m.all_rows()
        .into_iter()
        .map(|r| (labels[&r.id].clone(), r.keys.iter().map(|k| k.name.clone()).collect()))
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
