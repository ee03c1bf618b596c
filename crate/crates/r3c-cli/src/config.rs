//! Declarative run configuration: a TOML file supplies defaults for the
//! classifier and loop parameters, command-line flags override individual
//! values, and every run logs the fully-resolved result.

use std::path::Path;

use serde::{Deserialize, Serialize};

use r3c::classifiers::{FftParams, GaborParams};
use r3c::engine::R3CConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gabor: GaborParams,
    pub fft: FftParams,
    pub r3c: R3CConfig,
    pub sweep: SweepConfig,
    pub stub: StubConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub grid: Vec<f64>,
    pub jobs: usize,
    pub recall_radius: usize,
}

impl Default for SweepConfig {
    fn default() -> SweepConfig {
        SweepConfig {
            grid: r3c::eval::sweep::default_grid(),
            jobs: 1,
            recall_radius: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StubConfig {
    pub threshold: f32,
    pub radius: usize,
}

impl Default for StubConfig {
    fn default() -> StubConfig {
        StubConfig {
            threshold: 0.5,
            radius: 1,
        }
    }
}

impl RunConfig {
    /// Loads a TOML config file; unknown keys are rejected.
    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {}", path.display(), e))?;
        toml::from_str(&text).map_err(|e| format!("config {}: {}", path.display(), e))
    }

    /// One-line JSON of the fully-resolved configuration, for run logs.
    pub fn resolved_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
