use serde::{Deserialize, Serialize};

/// Unit costs of the three resources and of running one server for a day.
/// Speeds are in GB/s, carbon in kg CO2e per GB, fees in currency per GB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub ram_speed: f64,
    pub ssd_speed: f64,
    pub com_speed: f64,
    pub ram_carbon: f64,
    pub ssd_carbon: f64,
    pub com_carbon: f64,
    pub ext_transfer_fee: f64,
    pub server_carbon_per_day: f64,
    pub server_fee_per_day: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            ram_speed: 1.25,
            ssd_speed: 0.325,
            com_speed: 1.0,
            ram_carbon: 0.0280,
            ssd_carbon: 0.0031,
            com_carbon: 0.0110,
            ext_transfer_fee: 0.019,
            server_carbon_per_day: 0.87671,
            server_fee_per_day: 0.8543,
        }
    }
}

impl Constants {
    /// Returns the name of the first constant that is not strictly positive.
    pub fn check(&self) -> Result<(), &'static str> {
        let fields = [
            ("ram_speed", self.ram_speed),
            ("ssd_speed", self.ssd_speed),
            ("com_speed", self.com_speed),
            ("ram_carbon", self.ram_carbon),
            ("ssd_carbon", self.ssd_carbon),
            ("com_carbon", self.com_carbon),
            ("ext_transfer_fee", self.ext_transfer_fee),
            ("server_carbon_per_day", self.server_carbon_per_day),
            ("server_fee_per_day", self.server_fee_per_day),
        ];
        match fields.iter().find(|(_, v)| !(*v > 0.0)) {
            Some((name, _)) => Err(name),
            None => Ok(()),
        }
    }
}
