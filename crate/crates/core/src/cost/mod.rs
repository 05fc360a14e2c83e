//! Multidimensional query costs: per-server volumes, time, carbon and money.
//!
//! Volumes are in bytes. Time is in seconds, carbon in kg CO2e and money in
//! currency units; the per-server constants are daily figures.

mod constants;
mod plan;
mod volume;

use thiserror::Error;

use crate::model::ModelError;
use crate::workload::SelectivityError;

pub use constants::Constants;
pub use plan::{covered_rows, plan_query, query_cost, query_costs, total_cost, CoveredRow, PlanStep, QueryPlan};
pub use volume::{
    aggregate, dimension_costs, filter_volumes, servers_hit, static_cost, Aggregate, CostVector,
    Dimension, RowAccess, Strategy, VolumeBreakdown,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Selectivity(#[from] SelectivityError),
    #[error("key `{0}` is not stored in any row of the model")]
    Uncoverable(String),
    #[error("{0}")]
    Inconsistent(String),
    #[error("query {query}: {source}")]
    Query {
        query: String,
        #[source]
        source: Box<CostError>,
    },
}
