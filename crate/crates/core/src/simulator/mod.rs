//! Cost sweeps over models and settings, qualification against latency
//! bounds, ranking and plot data.

mod report;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::{query_costs, static_cost, Constants, CostVector, Dimension};
use crate::model::DataModel;
use crate::workload::{Query, Settings, Statistics};

pub use report::{emit_plot_data, to_csv, to_json};

/// A model to price, with the name and signature used in reports.
#[derive(Debug, Clone, Copy)]
pub struct SweepModel<'a> {
    pub name: &'a str,
    pub signature: &'a str,
    pub model: &'a DataModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub query: String,
    pub cost: CostVector,
}

/// Daily costs of one model at one setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub model: String,
    pub signature: String,
    pub scale: u64,
    pub servers: u64,
    /// Cost of one execution of each query.
    pub per_query: Vec<QueryResult>,
    /// Static cost plus occurrence-weighted query costs.
    pub total: CostVector,
    pub qualified: bool,
    pub violations: Vec<String>,
    /// Set when the model could not be priced; the row is then unqualified.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn settings(&self) -> Settings {
        Settings::new(self.scale, self.servers)
    }

    pub fn query_cost(&self, id: &str) -> Option<CostVector> {
        self.per_query.iter().find(|q| q.query == id).map(|q| q.cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub queries: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// Prices every model at every (scale, servers) pair. Rows come out ordered
/// by signature, model name, scale and servers whatever the evaluation order.
pub fn sweep(
    models: &[SweepModel],
    queries: &[Query],
    scales: &[u64],
    servers: &[u64],
    stats: &Statistics,
    constants: &Constants,
) -> SweepResult {
    let cells: Vec<(SweepModel, Settings)> = models
        .iter()
        .flat_map(|m| {
            scales.iter().flat_map(move |&scale| {
                servers.iter().map(move |&servers| (*m, Settings::new(scale, servers)))
            })
        })
        .collect();
    let mut rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|(m, settings)| price(m, queries, settings, stats, constants))
        .collect();
    rows.sort_by(row_order);
    SweepResult { queries: queries.iter().map(|q| q.id.clone()).collect(), rows }
}

fn row_order(a: &SweepRow, b: &SweepRow) -> Ordering {
    (&a.signature, &a.model, a.scale, a.servers).cmp(&(&b.signature, &b.model, b.scale, b.servers))
}

fn price(
    m: &SweepModel,
    queries: &[Query],
    settings: &Settings,
    stats: &Statistics,
    constants: &Constants,
) -> SweepRow {
    let mut row = SweepRow {
        model: m.name.to_string(),
        signature: m.signature.to_string(),
        scale: settings.scale,
        servers: settings.servers,
        per_query: Vec::new(),
        total: CostVector::ZERO,
        qualified: false,
        violations: Vec::new(),
        error: None,
    };
    match query_costs(m.model, queries, settings, stats, constants) {
        Ok(costs) => {
            row.total = static_cost(settings, constants)
                + queries.iter().zip(&costs).map(|(q, c)| *c * q.occurrences).sum();
            row.per_query = queries
                .iter()
                .zip(costs)
                .map(|(q, cost)| QueryResult { query: q.id.clone(), cost })
                .collect();
            row.violations = violations(&row, queries);
            row.qualified = row.violations.is_empty();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Queries whose time cost exceeds their latency bound.
pub fn violations(row: &SweepRow, queries: &[Query]) -> Vec<String> {
    queries
        .iter()
        .filter_map(|q| {
            let t = row.query_cost(&q.id)?.time;
            (t > q.latency_bound).then(|| format!("{}: {} s > {} s", q.id, t, q.latency_bound))
        })
        .collect()
}

/// The qualified rows: priced, and every query within its latency bound.
pub fn qualify(result: &SweepResult, queries: &[Query]) -> SweepResult {
    let rows = result
        .rows
        .iter()
        .filter(|r| r.error.is_none())
        .filter_map(|r| {
            let v = violations(r, queries);
            v.is_empty().then(|| SweepRow { qualified: true, violations: v, ..r.clone() })
        })
        .collect();
    SweepResult { queries: result.queries.clone(), rows }
}

/// Qualified rows in ascending order of one cost component, either of the
/// daily total or of a single query. Ties fall back to signature order.
pub fn rank<'a>(result: &'a SweepResult, dimension: Dimension, query: Option<&str>) -> Vec<&'a SweepRow> {
    order_by(result.rows.iter().filter(|r| r.qualified && r.error.is_none()), dimension, query)
}

/// Like [`rank`] but over every priced row, qualified or not.
pub fn rank_all<'a>(result: &'a SweepResult, dimension: Dimension, query: Option<&str>) -> Vec<&'a SweepRow> {
    order_by(result.rows.iter().filter(|r| r.error.is_none()), dimension, query)
}

fn order_by<'a>(
    rows: impl Iterator<Item = &'a SweepRow>,
    dimension: Dimension,
    query: Option<&str>,
) -> Vec<&'a SweepRow> {
    let value = |r: &SweepRow| match query {
        Some(id) => r.query_cost(id).map_or(f64::INFINITY, |c| c.get(dimension)),
        None => r.total.get(dimension),
    };
    let mut rows: Vec<&SweepRow> = rows.collect();
    rows.sort_by(|a, b| value(a).total_cmp(&value(b)).then_with(|| row_order(a, b)));
    rows
}

/// Log-scaled scores in [0, 1] of one row's daily totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotScore {
    pub model: String,
    pub signature: String,
    pub scale: u64,
    pub servers: u64,
    pub time: f64,
    pub carbon: f64,
    pub money: f64,
}

impl PlotScore {
    pub fn get(&self, dimension: Dimension) -> f64 {
        match dimension {
            Dimension::Time => self.time,
            Dimension::Carbon => self.carbon,
            Dimension::Money => self.money,
        }
    }
}

/// Scores each priced row per dimension as
/// `(ln(1+c) - ln(1+min)) / (ln(1+max) - ln(1+min))` over the whole sweep.
/// A dimension with a single distinct value scores 0 everywhere.
pub fn normalize_for_plot(result: &SweepResult) -> Vec<PlotScore> {
    let rows: Vec<&SweepRow> = result.rows.iter().filter(|r| r.error.is_none()).collect();
    let scale = |d: Dimension| {
        let logs: Vec<f64> = rows.iter().map(|r| r.total.get(d).ln_1p()).collect();
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        logs.into_iter()
            .map(|l| if hi > lo { (l - lo) / (hi - lo) } else { 0.0 })
            .collect::<Vec<f64>>()
    };
    let (t, e, f) = (scale(Dimension::Time), scale(Dimension::Carbon), scale(Dimension::Money));
    rows.iter()
        .enumerate()
        .map(|(i, r)| PlotScore {
            model: r.model.clone(),
            signature: r.signature.clone(),
            scale: r.scale,
            servers: r.servers,
            time: t[i],
            carbon: e[i],
            money: f[i],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::generate;
    use crate::workload::UseCase;

    fn tpcc_sweep(scales: &[u64]) -> (UseCase, SweepResult) {
        let uc = UseCase::tpcc();
        let gen = generate(&uc.model, &uc.queries).unwrap();
        let models: Vec<SweepModel> = gen
            .retained()
            .map(|n| SweepModel { name: &n.name, signature: &n.signature, model: &n.model })
            .collect();
        let result = sweep(&models, &uc.queries, scales, &[1000], &uc.statistics, &uc.constants);
        (uc, result)
    }

    #[test]
    fn one_row_per_model_and_setting() {
        let uc = UseCase::tpcc();
        let gen = generate(&uc.model, &uc.queries).unwrap();
        let (_, result) = tpcc_sweep(&uc.scales);
        assert_eq!(result.rows.len(), gen.retained().count() * 6);
        assert!(result.rows.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn single_cell() {
        let uc = UseCase::tpcc();
        let m = SweepModel { name: "M0", signature: "W,C,O", model: &uc.model };
        let r = sweep(&[m], &uc.queries, &[1], &[1], &uc.statistics, &uc.constants);
        assert_eq!(r.rows.len(), 1);
        let row = &r.rows[0];
        let recomputed = static_cost(&row.settings(), &uc.constants)
            + uc.queries.iter().map(|q| row.query_cost(&q.id).unwrap() * q.occurrences).sum();
        assert_eq!(row.total, recomputed);
    }

    #[test]
    fn failed_rows_do_not_stop_the_sweep() {
        let uc = UseCase::tpcc();
        let mut broken = uc.model.clone();
        broken.concepts.remove(0);
        let models = [
            SweepModel { name: "M0", signature: "W,C,O", model: &uc.model },
            SweepModel { name: "X", signature: "C,O", model: &broken },
        ];
        let r = sweep(&models, &uc.queries, &[1], &[10], &uc.statistics, &uc.constants);
        assert_eq!(r.rows.len(), 2);
        let bad = r.rows.iter().find(|r| r.model == "X").unwrap();
        assert!(bad.error.is_some() && !bad.qualified);
        assert!(qualify(&r, &uc.queries).rows.iter().all(|r| r.model != "X"));
    }

    #[test]
    fn unbounded_queries_qualify_everything() {
        let (uc, result) = tpcc_sweep(&[1000]);
        let mut relaxed = uc.queries.clone();
        for q in relaxed.iter_mut() {
            q.latency_bound = f64::INFINITY;
        }
        assert_eq!(qualify(&result, &relaxed).rows.len(), result.rows.len());
    }

    #[test]
    fn qualify_is_idempotent() {
        let (uc, result) = tpcc_sweep(&[1000, 1_000_000]);
        let once = qualify(&result, &uc.queries);
        assert_eq!(qualify(&once, &uc.queries), once);
    }

    #[test]
    fn rank_ties_follow_signature() {
        let uc = UseCase::tpcc();
        let m = SweepModel { name: "B", signature: "W,C,O", model: &uc.model };
        let n = SweepModel { name: "A", signature: "W,C,O", model: &uc.model };
        let mut relaxed = uc.queries.clone();
        for q in relaxed.iter_mut() {
            q.latency_bound = f64::INFINITY;
        }
        let r = sweep(&[m, n], &relaxed, &[1], &[1], &uc.statistics, &uc.constants);
        let order: Vec<_> = rank(&r, Dimension::Money, None).iter().map(|r| r.model.as_str()).collect();
        assert_eq!(order, ["A", "B"]);
    }

    #[test]
    fn rank_all_keeps_unqualified_rows() {
        let (_, result) = tpcc_sweep(&[1_000_000]);
        assert!(rank(&result, Dimension::Time, Some("Q5")).is_empty());
        let all = rank_all(&result, Dimension::Time, Some("Q5"));
        assert_eq!(all.len(), result.rows.len());
        assert!(all.windows(2).all(|w| w[0].query_cost("Q5").unwrap().time <= w[1].query_cost("Q5").unwrap().time));
    }

    #[test]
    fn scores_span_zero_to_one_and_keep_order() {
        let (_, result) = tpcc_sweep(&[1000, 100_000, 10_000_000]);
        let scores = normalize_for_plot(&result);
        for d in Dimension::ALL {
            let vals: Vec<f64> = scores.iter().map(|s| s.get(d)).collect();
            assert_eq!(vals.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
            assert_eq!(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0);
            for (a, sa) in result.rows.iter().zip(&scores) {
                for (b, sb) in result.rows.iter().zip(&scores) {
                    if a.total.get(d) < b.total.get(d) {
                        assert!(sa.get(d) <= sb.get(d));
                    }
                }
            }
        }
    }

    #[test]
    fn flat_dimension_scores_zero() {
        let uc = UseCase::tpcc();
        let m = SweepModel { name: "M0", signature: "W,C,O", model: &uc.model };
        let r = sweep(&[m], &[], &[1, 10], &[5], &uc.statistics, &uc.constants);
        assert!(normalize_for_plot(&r).iter().all(|s| s.time == 0.0 && s.carbon == 0.0));
    }
}
