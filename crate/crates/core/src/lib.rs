//! Generates denormalized NoSQL data models from a normalized schema and
//! prices them in time, carbon and money over a query workload.
//!
//! ```
//! use mdcost::cost::total_cost;
//! use mdcost::generator::generate;
//! use mdcost::workload::{Settings, UseCase};
//!
//! let uc = UseCase::tpcc();
//! let models = generate(&uc.model, &uc.queries).unwrap();
//! let m35 = models.find("O{C{W}}").unwrap();
//! let cost = total_cost(&m35.model, &uc.queries, &Settings::new(1_000, 1_000), &uc.statistics, &uc.constants)
//!     .unwrap();
//! assert!(cost.carbon > 876.71);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod generator;
pub mod model;
pub mod simulator;
pub mod workload;
