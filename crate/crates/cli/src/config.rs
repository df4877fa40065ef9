use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use wfbs::params::WfbsParams;
use wfbs::particle_system::ParticleConfig;

use crate::Failure;

/// Config of `wfbs verify`. Each suite reads the fields it needs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Sheet parameters for the `lrd`, `holder` and `increments` suites.
    pub params: Option<WfbsParams>,
    /// Particle system for `theorem31`; its `T` is replaced by the ladder.
    pub particles: Option<ParticleConfig>,
    /// `T` values for `theorem31`, shifts for `lrd`.
    pub ladder: Option<Vec<f64>>,
    pub replications: Option<usize>,
    pub grid_power: Option<u32>,
    pub ci_multiplier: Option<f64>,
    pub prelimit_multiplier: Option<f64>,
    pub gaussianity_multiplier: Option<f64>,
    pub prelimit: Option<bool>,
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}
