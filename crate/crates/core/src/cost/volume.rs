use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Serialize};

use super::{Constants, CostError};
use crate::workload::{Query, QueryMode, Settings, Statistics};

const BYTES_PER_GB: f64 = 1e9;

/// Time in seconds, carbon in kg CO2e, money in currency units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostVector {
    pub time: f64,
    pub carbon: f64,
    pub money: f64,
}

impl CostVector {
    pub const ZERO: CostVector = CostVector { time: 0.0, carbon: 0.0, money: 0.0 };

    pub fn new(time: f64, carbon: f64, money: f64) -> Self {
        CostVector { time, carbon, money }
    }

    pub fn get(&self, dimension: Dimension) -> f64 {
        match dimension {
            Dimension::Time => self.time,
            Dimension::Carbon => self.carbon,
            Dimension::Money => self.money,
        }
    }
}

impl Add for CostVector {
    type Output = CostVector;
    fn add(self, o: CostVector) -> CostVector {
        CostVector::new(self.time + o.time, self.carbon + o.carbon, self.money + o.money)
    }
}

impl AddAssign for CostVector {
    fn add_assign(&mut self, o: CostVector) {
        *self = *self + o;
    }
}

impl Mul<f64> for CostVector {
    type Output = CostVector;
    fn mul(self, k: f64) -> CostVector {
        CostVector::new(self.time * k, self.carbon * k, self.money * k)
    }
}

impl Sum for CostVector {
    fn sum<I: Iterator<Item = CostVector>>(iter: I) -> CostVector {
        iter.fold(CostVector::ZERO, Add::add)
    }
}

/// One of the three cost components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Time,
    Carbon,
    Money,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Time, Dimension::Carbon, Dimension::Money];

    pub fn name(&self) -> &'static str {
        match self {
            Dimension::Time => "time",
            Dimension::Carbon => "carbon",
            Dimension::Money => "money",
        }
    }
}

impl std::str::FromStr for Dimension {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "time" => Ok(Dimension::Time),
            "carbon" => Ok(Dimension::Carbon),
            "money" => Ok(Dimension::Money),
            other => Err(format!("unknown dimension `{other}` (expected time, carbon or money)")),
        }
    }
}

/// Bytes moved by one filter operation, server by server.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VolumeBreakdown {
    pub per_server_ram: Vec<f64>,
    pub per_server_com: Vec<f64>,
    pub ssd: f64,
    /// Result bytes shipped to the client.
    pub external_com: f64,
    /// Request dispatch to the servers.
    pub internal_com: f64,
}

/// Totals used by the cost equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub com: f64,
    /// Volume read by the busiest server.
    pub ram_time: f64,
    /// Volume read by all servers together.
    pub ram_energy: f64,
}

/// How a row is reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Filter on a sharding key: a single server answers.
    Sharded(String),
    /// Local index on every server.
    Indexed(String),
    Scan,
}

impl Strategy {
    pub fn describe(&self) -> String {
        match self {
            Strategy::Sharded(k) => format!("sharded on {k}"),
            Strategy::Indexed(k) => format!("index on {k}"),
            Strategy::Scan => "scan".to_string(),
        }
    }
}

/// Sizes and counts of the row a filter runs against.
#[derive(Debug, Clone, PartialEq)]
pub struct RowAccess {
    /// Bytes per stored document.
    pub document_size: f64,
    /// Bytes per document returned to the client.
    pub projected_size: f64,
    /// Documents stored across the cluster.
    pub documents: f64,
    /// Fraction of documents matching the filter.
    pub selectivity: f64,
}

/// Servers that may hold matching documents: one for a sharded filter,
/// otherwise one per matching document up to the cluster size.
pub fn servers_hit(documents: f64, servers: u64, selectivity: f64, sharded: bool) -> u64 {
    if sharded {
        return 1;
    }
    let matching = (documents * selectivity).ceil();
    if matching >= servers as f64 {
        servers
    } else {
        matching.max(0.0) as u64
    }
}

/// Per-server RAM and communication volumes of one filter.
pub fn filter_volumes(
    access: &RowAccess,
    strategy: &Strategy,
    settings: &Settings,
    stats: &Statistics,
    query: &Query,
) -> Result<VolumeBreakdown, CostError> {
    if settings.servers == 0 {
        return Err(CostError::Inconsistent("a cluster needs at least one server".into()));
    }
    let srv = settings.servers as usize;
    let q = stats.message_size(query);
    let matching = access.documents * access.selectivity;
    let mut ram = vec![0.0; srv];
    let mut com = vec![0.0; srv];
    let mut external = 0.0;
    let mut internal = 0.0;

    match strategy {
        Strategy::Sharded(key) => {
            if !query.is_sharded_on(key) {
                return Err(CostError::Inconsistent(format!(
                    "query {} has no sharding key `{key}`",
                    query.id
                )));
            }
            ram[0] = stats.shard_lookup_size + access.document_size * matching;
            let result = access.projected_size * matching;
            com[0] = q + result;
            internal += q;
            external += result;
        }
        Strategy::Indexed(key) => {
            if !stats.is_indexed(key) {
                return Err(CostError::Inconsistent(format!("no index on `{key}`")));
            }
            let local = access.documents / settings.servers as f64;
            let index = stats.index_probe_size(key, local)?;
            let hit = servers_hit(access.documents, settings.servers, access.selectivity, false);
            let per_hit = if hit == 0 { 0.0 } else { (matching / hit as f64).ceil() };
            for i in 0..srv {
                ram[i] = index;
                com[i] = q;
                internal += q;
                if i < hit as usize {
                    ram[i] += access.document_size * per_hit;
                    let result = access.projected_size * per_hit;
                    com[i] += result;
                    external += result;
                }
            }
        }
        Strategy::Scan => {
            let local = access.document_size * access.documents / settings.servers as f64;
            let hit = servers_hit(access.documents, settings.servers, access.selectivity, false);
            let per_hit = if hit == 0 { 0.0 } else { (matching / hit as f64).ceil() };
            for i in 0..srv {
                ram[i] = local;
                com[i] = q;
                internal += q;
                if i < hit as usize {
                    let result = access.projected_size * per_hit;
                    com[i] += result;
                    external += result;
                }
            }
        }
    }

    let ssd = match query.mode() {
        QueryMode::Read => 0.0,
        QueryMode::Update => ram.iter().sum(),
    };
    Ok(VolumeBreakdown {
        per_server_ram: ram,
        per_server_com: com,
        ssd,
        external_com: external,
        internal_com: internal,
    })
}

pub fn aggregate(breakdown: &VolumeBreakdown) -> Aggregate {
    Aggregate {
        com: breakdown.per_server_com.iter().sum(),
        ram_time: breakdown.per_server_ram.iter().copied().fold(0.0, f64::max),
        ram_energy: breakdown.per_server_ram.iter().sum(),
    }
}

/// Query-dependent cost of a breakdown. Volumes are converted to decimal GB.
pub fn dimension_costs(breakdown: &VolumeBreakdown, constants: &Constants) -> CostVector {
    let a = aggregate(breakdown);
    let gb = |bytes: f64| bytes / BYTES_PER_GB;
    CostVector {
        time: gb(a.ram_time) / constants.ram_speed
            + gb(breakdown.ssd) / constants.ssd_speed
            + gb(a.com) / constants.com_speed,
        carbon: gb(a.ram_energy) * constants.ram_carbon
            + gb(breakdown.ssd) * constants.ssd_carbon
            + gb(a.com) * constants.com_carbon,
        money: gb(breakdown.external_com) * constants.ext_transfer_fee,
    }
}

/// Daily cost of keeping the cluster up, whatever the workload.
pub fn static_cost(settings: &Settings, constants: &Constants) -> CostVector {
    let n = settings.servers as f64;
    CostVector {
        time: 0.0,
        carbon: n * constants.server_carbon_per_day,
        money: n * constants.server_fee_per_day,
    }
}
