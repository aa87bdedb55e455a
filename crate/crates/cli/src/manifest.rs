//! Provenance record written next to every command's outputs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub data: u64,
    pub random_clustering: u64,
    pub gp: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_digest: String,
    pub versions: BTreeMap<String, String>,
    pub seeds: Seeds,
    /// Output files relative to the output directory, sorted.
    pub outputs: Vec<String>,
    /// Fitness evaluations spent initializing the GP population count toward its budget.
    pub gp_budget_includes_initialization: bool,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, mut outputs: Vec<String>) -> Self {
        outputs.sort();
        let versions = BTreeMap::from([
            ("dagp".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("dagp-core".to_string(), dagp_core::VERSION.to_string()),
        ]);
        Manifest {
            command: command.to_string(),
            config_digest: config.digest(),
            versions,
            seeds: Seeds {
                data: config.seed,
                random_clustering: config.lon.cr_seed,
                gp: gp_seeds(config),
            },
            outputs,
            gp_budget_includes_initialization: true,
            config: config.clone(),
        }
    }

    pub fn file_name(command: &str) -> String {
        format!("manifest.{command}.json")
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(Self::file_name(&self.command));
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// Run `k` of the GP uses seed `seed + k`.
pub fn gp_seeds(config: &RunConfig) -> Vec<u64> {
    (0..config.gp.runs as u64).map(|k| config.seed + k).collect()
}
