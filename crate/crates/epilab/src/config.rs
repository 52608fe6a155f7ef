//! Laboratory configuration file (TOML).

use std::path::Path;

use epilab_core::batch::{SelectionCriteria, StdKind};
use epilab_core::engine::StopRule;
use epilab_core::params::EpidemicParams;
use epilab_core::rt::{McmcConfig, RsvdConfig};
use epilab_core::vaccine::{GaConfig, ScenarioPick};
use epilab_core::world::WorldConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Everything a command may need; every section is optional in the file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub world: WorldConfig,
    pub params: EpidemicParams,
    pub stop: StopRule,
    pub selection: SelectionCriteria,
    /// Standard deviation flavour of the statistics tables.
    pub std: StdKind,
    pub pick: ScenarioPick,
    pub ga: GaConfig,
    pub rsvd: RsvdConfig,
    pub mcmc: McmcConfig,
}

impl LabConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: LabConfig = toml::from_str(text)?;
        cfg.world.validate()?;
        cfg.params.validate()?;
        cfg.ga.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical TOML text followed by `extra` (for instance a
    /// schedule), in hex.
    pub fn hash(&self, extra: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml().as_bytes());
        h.update(extra.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
