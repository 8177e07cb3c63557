//! End-to-end reproductions of singular variational problems: each
//! scenario builds its epsilon-indexed solution, classifies it, checks the
//! claimed distributional shadow, and reports conservation or residual
//! verdicts. Results serialize to JSON plus CSV profiles for plotting.

mod elastostatics;
mod geodesic;
mod particle;
mod wave;
mod weierstrass;

pub use elastostatics::{
    beam_with_joint, hard_rod, rod_general, string_with_spring, BeamConfig, HardRodConfig,
    RodGeneralConfig, StringSpringConfig,
};
pub use geodesic::{geodesic_energy, GeodesicConfig, MetricKind};
pub use particle::{
    central_field, delta_particle, CentralFieldConfig, CentralPotential, DeltaParticleConfig,
};
pub use wave::{wave_delta_spring, SpringForce, WaveConfig};
pub use weierstrass::{weierstrass, WeierstrassConfig};

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::net_core::{EpsGrid, GridNet};
use std::sync::Arc;

/// One named pass/fail verdict with its numeric evidence.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: Value) -> Self {
        Check { name: name.to_string(), pass, detail }
    }
}

#[derive(Debug, Serialize)]
pub struct ScenarioResult {
    pub name: String,
    /// Full configuration echo, so every number is reproducible.
    pub params: Value,
    pub checks: Vec<Check>,
    /// (file name, contents) pairs of CSV artifacts.
    #[serde(skip)]
    pub csv: Vec<(String, String)>,
}

impl ScenarioResult {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario results are serializable")
    }
}

/// Geometric epsilon grid from a (min, max, count) config triple.
pub fn eps_grid_from(eps_min: f64, eps_max: f64, eps_count: usize) -> Result<Arc<EpsGrid>> {
    Ok(Arc::new(EpsGrid::geometric(eps_min, eps_max, eps_count)?))
}

/// Writes per-epsilon trajectory rows (time, value) into one CSV artifact.
pub(crate) fn net_csv(name: &str, net: &GridNet) -> (String, String) {
    (format!("{name}.csv"), net.to_csv())
}
