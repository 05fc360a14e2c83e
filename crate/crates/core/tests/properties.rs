mod common;

use std::collections::BTreeMap;

use common::{all_steps, free_closure, key_sets, pair_schema, rel_close, small_model};
use mdcost::cost::{
    aggregate, filter_volumes, query_cost, total_cost, Constants, RowAccess, Strategy, VolumeBreakdown,
};
use mdcost::generator::{generate, merge, merge_inverse, split, split_inverse};
use mdcost::model::{document_size, storage_volume, KeyKind, MergeDirection};
use mdcost::workload::{QueryKind, Settings, UseCase};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn merge_inverse_undoes_merge(m in small_model()) {
        for r in m.references.clone() {
            for d in [MergeDirection::NestSourceIntoTarget, MergeDirection::NestTargetIntoSource] {
                let Ok(merged) = merge(&m, &r, d) else { continue };
                let guest = match d {
                    MergeDirection::NestSourceIntoTarget => r.source.row,
                    MergeDirection::NestTargetIntoSource => r.target.row,
                };
                let back = merge_inverse(&merged, guest).unwrap();
                prop_assert_eq!(back.signature(), m.signature());
                prop_assert_eq!(back.canonical_form(), m.canonical_form());
                prop_assert_eq!(key_sets(&back), key_sets(&m));
            }
        }
    }

    #[test]
    fn split_inverse_undoes_split(m in small_model()) {
        for row in m.rows() {
            for k in row.keys.iter().filter(|k| matches!(k.kind, KeyKind::Atomic)) {
                let Ok(s) = split(&m, row.id, &k.name) else { continue };
                let fresh = s.rows().map(|r| r.id).find(|id| m.row(*id).is_none()).unwrap();
                let back = split_inverse(&s, row.id, fresh).unwrap();
                prop_assert_eq!(back.signature(), m.signature());
                prop_assert_eq!(back.canonical_form(), m.canonical_form());
                prop_assert_eq!(key_sets(&back), key_sets(&m));
            }
        }
    }

    #[test]
    fn busiest_server_never_exceeds_the_cluster(ram in prop::collection::vec(0.0f64..1e12, 1..64)) {
        let b = VolumeBreakdown { per_server_ram: ram, ..Default::default() };
        let a = aggregate(&b);
        prop_assert!(a.ram_time <= a.ram_energy);
    }

    #[test]
    fn ssd_volume_follows_the_query_mode(
        doc in 1.0f64..4096.0,
        docs in 1.0f64..1e9,
        sel in 1e-9f64..=1.0,
        servers in 1u64..200,
        strategy in 0usize..3,
        update in any::<bool>(),
    ) {
        let uc = UseCase::tpcc();
        let mut q = uc.queries[2].clone();
        q.kind = if update { QueryKind::Update } else { QueryKind::Filter };
        let strategy = [Strategy::Sharded("w_city".into()), Strategy::Indexed("w_ID".into()), Strategy::Scan][strategy].clone();
        let access = RowAccess { document_size: doc, projected_size: doc / 2.0, documents: docs, selectivity: sel };
        let b = filter_volumes(&access, &strategy, &Settings::new(1, servers), &uc.statistics, &q).unwrap();
        if update {
            prop_assert_eq!(b.ssd, aggregate(&b).ram_energy);
        } else {
            prop_assert_eq!(b.ssd, 0.0);
        }
        prop_assert_eq!(b.per_server_ram.len(), servers as usize);
        prop_assert!(rel_close(b.external_com + b.internal_com, b.per_server_com.iter().sum(), 1e-12));
    }

    #[test]
    fn total_cost_is_linear_in_occurrences(
        which in 0usize..5,
        omega in 0.0f64..1e4,
        scale in 1u64..100_000,
    ) {
        let uc = UseCase::tpcc();
        let s = Settings::new(scale, 1000);
        let mut qs = uc.queries.clone();
        qs[which].occurrences = omega;
        let base = total_cost(&uc.model, &qs, &s, &uc.statistics, &uc.constants).unwrap();
        qs[which].occurrences = 2.0 * omega;
        let doubled = total_cost(&uc.model, &qs, &s, &uc.statistics, &uc.constants).unwrap();
        let one = query_cost(&uc.model, &qs[which], &s, &uc.statistics, &uc.constants).unwrap() * omega;
        prop_assert!(rel_close(doubled.time - base.time, one.time, 1e-9));
        prop_assert!(rel_close(doubled.carbon - base.carbon, one.carbon, 1e-6));
        prop_assert!(rel_close(doubled.money - base.money, one.money, 1e-6));
    }

    #[test]
    fn update_adds_ssd_time(scale in 1u64..10_000, which in 0usize..5) {
        let uc = UseCase::tpcc();
        let s = Settings::new(scale, 1000);
        let read = uc.queries[which].clone();
        let mut write = read.clone();
        write.kind = QueryKind::Update;
        let r = query_cost(&uc.model, &read, &s, &uc.statistics, &uc.constants).unwrap();
        let w = query_cost(&uc.model, &write, &s, &uc.statistics, &uc.constants).unwrap();
        prop_assert!(w.time > r.time);
        prop_assert!(w.carbon > r.carbon);
    }

    #[test]
    fn sharding_reads_less_than_indexing_when_the_lookup_is_small(
        doc in 1.0f64..4096.0,
        docs in 1.0f64..1e9,
        sel in 1e-9f64..=1.0,
        servers in 1u64..200,
    ) {
        let uc = UseCase::tpcc();
        let mut stats = uc.statistics.clone();
        stats.indexed.insert("w_city".into());
        let q = &uc.queries[2];
        let access = RowAccess { document_size: doc, projected_size: doc, documents: docs, selectivity: sel };
        let s = Settings::new(1, servers);
        let index = stats.index_probe_size("w_city", docs / servers as f64).unwrap();
        prop_assume!(stats.shard_lookup_size <= servers as f64 * index);
        let sharded = filter_volumes(&access, &Strategy::Sharded("w_city".into()), &s, &stats, q).unwrap();
        let indexed = filter_volumes(&access, &Strategy::Indexed("w_city".into()), &s, &stats, q).unwrap();
        prop_assert!(aggregate(&sharded).ram_energy <= aggregate(&indexed).ram_energy * (1.0 + 1e-12));
    }
}

#[test]
fn costs_grow_with_scale() {
    let uc = UseCase::tpcc();
    let gen = generate(&uc.model, &uc.queries).unwrap();
    for n in gen.retained() {
        let mut prev: Option<Vec<f64>> = None;
        for scale in [1, 10, 100, 1_000, 10_000] {
            let s = Settings::new(scale, 1000);
            let c = total_cost(&n.model, &uc.queries, &s, &uc.statistics, &uc.constants).unwrap();
            let now = vec![c.time, c.carbon, c.money];
            if let Some(p) = prev {
                for (a, b) in p.iter().zip(&now) {
                    assert!(b >= a, "{} decreased at scale {scale}", n.signature);
                }
            }
            prev = Some(now);
        }
    }
}

#[test]
fn sizes_are_linear_in_scale() {
    let uc = UseCase::tpcc();
    let gen = generate(&uc.model, &uc.queries).unwrap();
    for n in gen.retained() {
        let one = storage_volume(&n.model, &Settings::new(1, 1), &uc.statistics.profile).unwrap();
        let many = storage_volume(&n.model, &Settings::new(37, 1), &uc.statistics.profile).unwrap();
        assert!(rel_close(many, 37.0 * one, 1e-12), "{}", n.signature);
    }
}

#[test]
fn splits_only_duplicate_primary_keys() {
    let uc = UseCase::tpcc();
    let p = &uc.statistics.profile;
    let s = Settings::new(1, 1);
    let base = storage_volume(&uc.model, &s, p).unwrap();
    let gen = generate(&uc.model, &uc.queries).unwrap();
    for n in gen.retained().filter(|n| !n.model.rows().any(|r| r.has_nested())) {
        let mut extra = 0.0;
        for (origin, ids) in n.model.lineages() {
            let pk = &n.model.row(ids[0]).unwrap().primary_key;
            extra += (ids.len() - 1) as f64 * p.key_size[pk] * p.row_count[&origin];
        }
        assert_eq!(storage_volume(&n.model, &s, p).unwrap(), base + extra, "{}", n.signature);
    }
}

#[test]
fn merging_the_one_side_under_the_many_side_duplicates_data() {
    let uc = UseCase::tpcc();
    let p = &uc.statistics.profile;
    let s = Settings::new(1, 1);
    let base = storage_volume(&uc.model, &s, p).unwrap();
    for r in &uc.model.references {
        let m = merge(&uc.model, r, MergeDirection::NestTargetIntoSource).unwrap();
        assert!(storage_volume(&m, &s, p).unwrap() >= base);
    }
}

#[test]
fn host_size_adds_nested_rows() {
    let uc = UseCase::tpcc();
    let p = &uc.statistics.profile;
    let gen = generate(&uc.model, &uc.queries).unwrap();
    for n in gen.retained() {
        for row in n.model.all_rows() {
            let atomic: f64 = row.atomic_keys().map(|k| p.key_size[&k.name]).sum();
            let nested: f64 = row
                .nested()
                .map(|x| x.multiplicity.average() * document_size(&x.row, p).unwrap())
                .sum();
            assert_eq!(document_size(row, p).unwrap(), atomic + nested);
        }
    }
}

#[test]
fn canonical_form_separates_distinct_layouts() {
    let (root, _) = pair_schema();
    let mut layout_of: BTreeMap<String, String> = BTreeMap::new();
    for m in free_closure(&root).values() {
        for child in all_steps(m).into_iter().chain([m.clone()]) {
            let mut refs: Vec<String> = child.references.iter().map(|r| child.describe_reference(r)).collect();
            refs.sort();
            let layout = format!("{:?} {:?}", key_sets(&child), refs);
            if let Some(prev) = layout_of.insert(child.canonical_form(), layout.clone()) {
                assert_eq!(prev, layout);
            }
        }
    }
}

#[test]
fn static_cost_is_independent_of_the_model() {
    let uc = UseCase::tpcc();
    let s = Settings::new(10, 1000);
    let c = Constants::default();
    let gen = generate(&uc.model, &uc.queries).unwrap();
    let totals: Vec<_> = gen
        .retained()
        .map(|n| total_cost(&n.model, &[], &s, &uc.statistics, &c).unwrap())
        .collect();
    assert!(totals.windows(2).all(|w| w[0] == w[1]));
}
