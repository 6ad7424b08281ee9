//! Analytic bound evaluators. Each returns the constant-free core of a bound
//! so measured burning rates can be compared as ratios.

mod evaluators;
mod optimize;
mod partition;

pub use evaluators::{
    cellular_upper_bound, homogenized_lower_bound, percolating_bound, shear_bound_thm1, shear_bound_thm4, shear_tubes,
    timedep_bound, universal_lower_bound, upper_bound, HomogenizedBound,
};
pub use optimize::optimize_partition;
pub use partition::{partition_sign_intervals, Partition, Sign, SignedInterval};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Serialised form `{name, core, units, tau0, inputs, caveats}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub core: f64,
    pub units: String,
    pub tau0: f64,
    pub inputs: Map<String, Value>,
    pub caveats: Vec<String>,
}

impl BoundReport {
    pub(crate) fn new(name: &str, core: f64, tau0: f64) -> Self {
        BoundReport {
            name: name.to_string(),
            core,
            units: "velocity".into(),
            tau0,
            inputs: Map::new(),
            caveats: vec!["universal constant C omitted; compare as a ratio".into()],
        }
    }

    pub(crate) fn input(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub(crate) fn caveat(mut self, note: impl Into<String>) -> Self {
        self.caveats.push(note.into());
        self
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
