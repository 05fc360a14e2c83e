//! Merge and split refinements and their inverses.

use crate::model::{
    DataModel, KeyKind, KeyValue, MergeDirection, MergeRecord, ModelError, Multiplicity, Nested,
    Reference, RemovedKey, Row, RowId,
};

fn row_name(model: &DataModel, id: RowId) -> String {
    model.row(id).map(|_| model.label(id)).unwrap_or_else(|| format!("#{}", id.0))
}

/// Nests one endpoint row of `reference` inside the other and drops the
/// reference. Nesting the source into the target yields an array of
/// `cardinality` elements; nesting the target into the source copies it into
/// every source document. The referencing key disappears with the reference
/// unless it is the primary key of its row.
pub fn merge(
    model: &DataModel,
    reference: &Reference,
    direction: MergeDirection,
) -> Result<DataModel, ModelError> {
    let index = model
        .reference_index(reference)
        .ok_or_else(|| ModelError::ReferenceNotFound(model.describe_reference(reference)))?;
    let (src, tgt) = (reference.source.row, reference.target.row);
    if src == tgt {
        return Err(ModelError::CyclicNesting(row_name(model, src)));
    }
    for id in [src, tgt] {
        if model.row(id).is_none() {
            return Err(ModelError::RowNotFound(format!("#{}", id.0)));
        }
        if !model.is_top_level(id) {
            return Err(ModelError::NotTopLevel(model.label(id)));
        }
    }
    let (host_id, guest_id, multiplicity) = match direction {
        MergeDirection::NestSourceIntoTarget => (tgt, src, Multiplicity::OneToMany(reference.cardinality)),
        MergeDirection::NestTargetIntoSource => (src, tgt, Multiplicity::OneToOne),
    };

    let mut out = model.clone();
    out.references.remove(index);
    let mut guest = out.take_top_level(guest_id).expect("checked above");

    let source_row: &mut Row = if guest.id == src { &mut guest } else { out.row_mut(src).expect("source exists") };
    let removed = if source_row.primary_key == reference.source.key {
        None
    } else {
        let pos = source_row
            .keys
            .iter()
            .position(|k| k.name == reference.source.key && matches!(k.kind, KeyKind::Atomic))
            .ok_or_else(|| ModelError::KeyNotFound {
                row: model.label(src),
                key: reference.source.key.clone(),
            })?;
        Some(RemovedKey { row: src, key: source_row.keys.remove(pos) })
    };

    let host = out.row_mut(host_id).expect("host exists");
    let mut name = guest.origin.row.clone();
    if host.has_key(&name) {
        name = format!("{}#{}", name, guest.id.0);
    }
    let rank = guest.origin.row_rank;
    host.keys.push(KeyValue {
        name,
        rank,
        kind: KeyKind::Complex(Box::new(Nested {
            row: guest,
            multiplicity,
            merge: MergeRecord { reference: reference.clone(), direction, removed },
        })),
    });
    Ok(out)
}

/// Lifts a nested row back to top level, restores the key its merge removed
/// and re-creates the reference.
pub fn merge_inverse(model: &DataModel, nested: RowId) -> Result<DataModel, ModelError> {
    if model.row(nested).is_none() {
        return Err(ModelError::RowNotFound(format!("#{}", nested.0)));
    }
    if model.is_top_level(nested) {
        return Err(ModelError::NotComplex(model.label(nested)));
    }
    let mut out = model.clone();
    let mut lifted: Option<Nested> = None;
    out.for_each_row_mut(&mut |row| {
        if lifted.is_some() {
            return;
        }
        let pos = row
            .keys
            .iter()
            .position(|k| matches!(&k.kind, KeyKind::Complex(n) if n.row.id == nested));
        if let Some(pos) = pos {
            if let KeyKind::Complex(n) = row.keys.remove(pos).kind {
                lifted = Some(*n);
            }
        }
    });
    let Nested { row, merge, .. } = lifted.expect("nested row has a host");
    out.put_top_level(row);
    if let Some(removed) = merge.removed {
        let holder = out.row_mut(removed.row).ok_or_else(|| ModelError::RowNotFound(format!("#{}", removed.row.0)))?;
        holder.insert_atomic(removed.key);
    }
    out.references.push(merge.reference);
    Ok(out)
}

/// Moves `key` out of `row` into a new fragment holding the primary key and
/// `key`. The remainder keeps the row's identity; references on `key` follow
/// the key into the new fragment.
pub fn split(model: &DataModel, row: RowId, key: &str) -> Result<DataModel, ModelError> {
    let r = model.row(row).ok_or_else(|| ModelError::RowNotFound(format!("#{}", row.0)))?;
    let label = model.label(row);
    if !model.is_top_level(row) {
        return Err(ModelError::NotTopLevel(label));
    }
    let pos = r
        .keys
        .iter()
        .position(|k| k.name == key)
        .ok_or_else(|| ModelError::KeyNotFound { row: label.clone(), key: key.to_string() })?;
    if r.primary_key == key {
        return Err(ModelError::PrimaryKeySplit { row: label, key: key.to_string() });
    }
    if !matches!(r.keys[pos].kind, KeyKind::Atomic) {
        return Err(ModelError::ComplexKeySplit { row: label, key: key.to_string() });
    }
    if !r.is_split_candidate() {
        return Err(ModelError::EmptyFragment { row: label, key: key.to_string() });
    }
    let pk = r
        .keys
        .iter()
        .find(|k| k.name == r.primary_key)
        .cloned()
        .ok_or_else(|| ModelError::KeyNotFound { row: label.clone(), key: r.primary_key.clone() })?;

    let mut out = model.clone();
    let new_id = out.next_row_id();
    let remainder = out.row_mut(row).expect("row exists");
    let moved = remainder.keys.remove(pos);
    let fragment = Row {
        id: new_id,
        origin: remainder.origin.clone(),
        keys: vec![pk, moved],
        primary_key: remainder.primary_key.clone(),
    };
    out.put_top_level(fragment);
    retarget(&mut out, row, new_id, |k| k == key);
    Ok(out)
}

/// Re-joins two fragments of the same row: the union of their keys, the
/// primary key once. The fragment with the smaller id survives.
pub fn split_inverse(model: &DataModel, a: RowId, b: RowId) -> Result<DataModel, ModelError> {
    let ra = model.row(a).ok_or_else(|| ModelError::RowNotFound(format!("#{}", a.0)))?;
    let rb = model.row(b).ok_or_else(|| ModelError::RowNotFound(format!("#{}", b.0)))?;
    if a == b || ra.origin != rb.origin || ra.primary_key != rb.primary_key {
        return Err(ModelError::NotCoLineal(model.label(a), model.label(b)));
    }
    for id in [a, b] {
        if !model.is_top_level(id) {
            return Err(ModelError::NotTopLevel(model.label(id)));
        }
    }
    let (keep, gone) = if a < b { (a, b) } else { (b, a) };
    let mut out = model.clone();
    let absorbed = out.take_top_level(gone).expect("checked above");
    let survivor = out.row_mut(keep).expect("checked above");
    for k in absorbed.keys {
        if k.name == absorbed.primary_key {
            continue;
        }
        match k.kind {
            KeyKind::Atomic => survivor.insert_atomic(k),
            KeyKind::Complex(_) => survivor.keys.push(k),
        }
    }
    retarget(&mut out, gone, keep, |_| true);
    Ok(out)
}

/// Points every reference endpoint and merge record on `from` (restricted to
/// keys accepted by `which`) at `to`.
fn retarget(model: &mut DataModel, from: RowId, to: RowId, which: impl Fn(&str) -> bool) {
    let fix = |r: &mut Reference| {
        if r.source.row == from && which(&r.source.key) {
            r.source.row = to;
        }
        if r.target.row == from && which(&r.target.key) {
            r.target.row = to;
        }
    };
    for r in model.references.iter_mut() {
        fix(r);
    }
    model.for_each_row_mut(&mut |row| {
        for k in row.keys.iter_mut() {
            if let KeyKind::Complex(n) = &mut k.kind {
                fix(&mut n.merge.reference);
                if let Some(removed) = &mut n.merge.removed {
                    if removed.row == from && which(&removed.key.name) {
                        removed.row = to;
                    }
                }
            }
        }
    });
}
