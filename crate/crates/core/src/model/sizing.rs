use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DataModel, ModelError, Row};
use crate::workload::Settings;

/// Byte sizes of atomic keys and per-unit-scale document counts of root rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SizeProfile {
    pub key_size: BTreeMap<String, f64>,
    /// Documents of each root row per unit of scale (one warehouse in TPC-C).
    pub row_count: BTreeMap<String, f64>,
}

impl SizeProfile {
    pub fn key_size(&self, key: &str) -> Result<f64, ModelError> {
        self.key_size.get(key).copied().ok_or_else(|| ModelError::MissingKeySize(key.to_string()))
    }
}

/// Size in bytes of one document of `row`: atomic keys plus, for each nested
/// row, its size times the average multiplicity.
pub fn document_size(row: &Row, profile: &SizeProfile) -> Result<f64, ModelError> {
    let mut size = 0.0;
    for key in row.atomic_keys() {
        size += profile.key_size(&key.name)?;
    }
    for nested in row.nested() {
        size += nested.multiplicity.average() * document_size(&nested.row, profile)?;
    }
    Ok(size)
}

/// Size of a document restricted to `keys`, nested rows included.
pub fn projected_size(
    row: &Row,
    keys: &BTreeSet<String>,
    profile: &SizeProfile,
) -> Result<f64, ModelError> {
    let mut size = 0.0;
    for key in row.atomic_keys().filter(|k| keys.contains(&k.name)) {
        size += profile.key_size(&key.name)?;
    }
    for nested in row.nested() {
        size += nested.multiplicity.average() * projected_size(&nested.row, keys, profile)?;
    }
    Ok(size)
}

/// Number of documents of a top-level row: the base count of its lineage
/// times the scale. Fragments keep their lineage's count and a host keeps its
/// own count whatever is nested in it.
pub fn document_count(
    row: &Row,
    settings: &Settings,
    profile: &SizeProfile,
) -> Result<f64, ModelError> {
    profile
        .row_count
        .get(&row.origin.row)
        .map(|base| base * settings.scale as f64)
        .ok_or_else(|| ModelError::UnknownLineage(row.origin.row.clone()))
}

/// Total stored bytes of a model at the given setting.
pub fn storage_volume(
    model: &DataModel,
    settings: &Settings,
    profile: &SizeProfile,
) -> Result<f64, ModelError> {
    model.rows().try_fold(0.0, |acc, row| {
        Ok(acc + document_count(row, settings, profile)? * document_size(row, profile)?)
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::tests::tpcc_root;
    use crate::model::{ModelBuilder, RowId};

    pub(crate) fn tpcc_profile() -> SizeProfile {
        let sizes = [
            ("w_ID", 8.0),
            ("w_name", 32.0),
            ("w_city", 24.0),
            ("c_ID", 8.0),
            ("balance", 8.0),
            ("c_last", 32.0),
            ("w_c_ID", 8.0),
            ("o_ID", 8.0),
            ("c_o_ID", 8.0),
            ("o_carrier_id", 8.0),
        ];
        SizeProfile {
            key_size: sizes.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            row_count: [("W", 1.0), ("C", 30_000.0), ("O", 60_000.0)]
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }

    fn at(scale: u64) -> Settings {
        Settings { scale, servers: 1 }
    }

    #[test]
    fn warehouse_document_size() {
        let m = tpcc_root();
        assert_eq!(document_size(m.row(RowId(0)).unwrap(), &tpcc_profile()).unwrap(), 64.0);
    }

    #[test]
    fn empty_row_has_zero_size() {
        let mut m = ModelBuilder::new("x").row("A", "A", "a", &["a"]).build().unwrap();
        m.concepts[0].rows[0].keys.clear();
        assert_eq!(document_size(&m.concepts[0].rows[0], &tpcc_profile()).unwrap(), 0.0);
    }

    #[test]
    fn missing_key_size_names_the_key() {
        let m = ModelBuilder::new("x").row("A", "A", "a", &["a", "zz"]).build().unwrap();
        let mut profile = tpcc_profile();
        profile.key_size.insert("a".into(), 1.0);
        let err = document_size(&m.concepts[0].rows[0], &profile).unwrap_err();
        assert_eq!(err, ModelError::MissingKeySize("zz".into()));
    }

    #[test]
    fn document_counts_scale_with_warehouses() {
        let m = tpcc_root();
        let p = tpcc_profile();
        assert_eq!(document_count(m.row(RowId(1)).unwrap(), &at(1), &p).unwrap(), 30_000.0);
        assert_eq!(document_count(m.row(RowId(2)).unwrap(), &at(1_000_000), &p).unwrap(), 6.0e10);
    }

    #[test]
    fn unknown_lineage_is_an_error() {
        let m = ModelBuilder::new("x").row("Z", "Z", "z", &["z"]).build().unwrap();
        let err = document_count(&m.concepts[0].rows[0], &at(1), &tpcc_profile()).unwrap_err();
        assert_eq!(err, ModelError::UnknownLineage("Z".into()));
    }

    #[test]
    fn normalized_storage_volume() {
        let v = storage_volume(&tpcc_root(), &at(1), &tpcc_profile()).unwrap();
        assert_eq!(v, 64.0 + 30_000.0 * 56.0 + 60_000.0 * 24.0);
    }

    #[test]
    fn empty_model_stores_nothing() {
        let m = DataModel { name: "e".into(), concepts: vec![], references: vec![], edges: vec![] };
        assert_eq!(storage_volume(&m, &at(7), &tpcc_profile()).unwrap(), 0.0);
    }

    #[test]
    fn projection_counts_only_requested_keys() {
        let m = tpcc_root();
        let keys: BTreeSet<String> = ["c_last", "c_ID", "o_ID"].iter().map(|s| s.to_string()).collect();
        assert_eq!(projected_size(m.row(RowId(1)).unwrap(), &keys, &tpcc_profile()).unwrap(), 40.0);
    }
}
