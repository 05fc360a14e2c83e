use std::collections::BTreeMap;

use super::{DataModel, KeyKind, Multiplicity, Reference, Row, RowId};

/// Display labels and collation positions for every row of a model.
struct Layout {
    labels: BTreeMap<RowId, String>,
    order: BTreeMap<RowId, (u32, usize)>,
}

impl DataModel {
    /// Row labels: the origin name, suffixed with a fragment number
    /// (`C1`, `C2`, ...) when the origin has been split. Fragments are numbered
    /// by the lowest declaration rank of the keys they own.
    pub fn labels(&self) -> BTreeMap<RowId, String> {
        self.layout().labels
    }

    fn layout(&self) -> Layout {
        let mut labels = BTreeMap::new();
        let mut order = BTreeMap::new();
        for (origin, mut ids) in self.lineages() {
            let rank = self.row(ids[0]).map_or(u32::MAX, |r| r.origin.row_rank);
            if ids.len() == 1 {
                labels.insert(ids[0], origin.clone());
                order.insert(ids[0], (rank, 0));
                continue;
            }
            ids.sort_by_cached_key(|id| self.fragment_key(*id));
            for (i, id) in ids.into_iter().enumerate() {
                labels.insert(id, format!("{origin}{}", i + 1));
                order.insert(id, (rank, i));
            }
        }
        Layout { labels, order }
    }

    fn fragment_key(&self, id: RowId) -> (u32, String) {
        let lead = self.owned_ranks(id).into_iter().next().unwrap_or(u32::MAX);
        let shape = self.row(id).map(structural_shape).unwrap_or_default();
        (lead, shape)
    }

    /// Compact signature: rows separated by commas, nested rows in braces,
    /// split rows numbered. `W,C,O`, `W,C{O}`, `O{C{W}}`, `W,C1,C2,C3,O1,O2`.
    ///
    /// Two models can share a compact signature while differing in key layout;
    /// [`DataModel::canonical_form`] tells them apart.
    pub fn signature(&self) -> String {
        let layout = self.layout();
        let mut rows: Vec<&Row> = self.rows().collect();
        rows.sort_by_key(|r| layout.order[&r.id]);
        rows.iter().map(|r| short_row(r, &layout)).collect::<Vec<_>>().join(",")
    }

    /// Injective rendering of the model structure: every row with its keys
    /// (primary key starred), nested rows with the merged reference and
    /// multiplicity, then the remaining references.
    pub fn canonical_form(&self) -> String {
        let layout = self.layout();
        let mut rows: Vec<&Row> = self.rows().collect();
        rows.sort_by_key(|r| layout.order[&r.id]);
        let mut out = rows.iter().map(|r| full_row(r, &layout)).collect::<Vec<_>>().join(",");
        let mut refs: Vec<String> =
            self.references.iter().map(|r| render_reference(r, &layout)).collect();
        refs.sort();
        out.push_str(" / ");
        out.push_str(&refs.join(";"));
        if !self.edges.is_empty() {
            let mut edges: Vec<String> =
                self.edges.iter().map(|e| format!("{}-{}", e.from, e.to)).collect();
            edges.sort();
            out.push_str(" / ");
            out.push_str(&edges.join(";"));
        }
        out
    }

    /// Top-level rows in collation order: origin declaration order, then
    /// fragment number.
    pub fn ordered_rows(&self) -> Vec<&Row> {
        let layout = self.layout();
        let mut rows: Vec<&Row> = self.rows().collect();
        rows.sort_by_key(|r| layout.order[&r.id]);
        rows
    }

    /// Renders a reference with row labels, e.g. `O.c_o_ID>C.c_ID`.
    pub fn describe_reference(&self, reference: &Reference) -> String {
        render_reference(reference, &self.layout())
    }
}

fn sorted_nested<'a>(row: &'a Row, layout: &Layout) -> Vec<&'a super::Nested> {
    let mut nested: Vec<_> = row.nested().collect();
    nested.sort_by_key(|n| layout.order.get(&n.row.id).copied().unwrap_or((u32::MAX, 0)));
    nested
}

fn short_row(row: &Row, layout: &Layout) -> String {
    let mut out = layout.labels[&row.id].clone();
    let nested = sorted_nested(row, layout);
    if !nested.is_empty() {
        out.push('{');
        out.push_str(
            &nested.iter().map(|n| short_row(&n.row, layout)).collect::<Vec<_>>().join(","),
        );
        out.push('}');
    }
    out
}

fn full_row(row: &Row, layout: &Layout) -> String {
    let mut parts: Vec<String> = row
        .atomic_keys()
        .map(|k| if k.name == row.primary_key { format!("{}*", k.name) } else { k.name.clone() })
        .collect();
    for n in sorted_nested(row, layout) {
        let mult = match n.multiplicity {
            Multiplicity::OneToOne => "1".to_string(),
            Multiplicity::OneToMany(avg) => format!("n{avg}"),
        };
        parts.push(format!(
            "{{{}|{}|{}}}",
            render_reference(&n.merge.reference, layout),
            mult,
            full_row(&n.row, layout)
        ));
    }
    format!("{}({})", layout.labels[&row.id], parts.join(","))
}

fn render_reference(r: &Reference, layout: &Layout) -> String {
    let label = |id: &RowId| layout.labels.get(id).cloned().unwrap_or_else(|| format!("#{}", id.0));
    format!("{}.{}>{}.{}", label(&r.source.row), r.source.key, label(&r.target.row), r.target.key)
}

/// Label-free description of a row, used to order fragments that own no key.
fn structural_shape(row: &Row) -> String {
    let parts: Vec<String> = row
        .keys
        .iter()
        .map(|k| match &k.kind {
            KeyKind::Atomic => k.name.clone(),
            KeyKind::Complex(n) => format!("{{{}}}", structural_shape(&n.row)),
        })
        .collect();
    format!("{}({})", row.origin.row, parts.join(","))
}
