use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use debris_core::baselines::GaConfig;
use debris_core::mission::{LegCostConfig, ParkingOrbit};
use debris_core::ppo::PpoConfig;

/// Everything a run depends on besides its input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_debris: usize,
    pub parking: ParkingOrbit,
    pub leg: LegCostConfig,
    pub ga: GaConfig,
    pub ppo: PpoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_debris: 5,
            parking: ParkingOrbit::default(),
            leg: LegCostConfig::default(),
            ga: GaConfig::default(),
            ppo: PpoConfig::default(),
        }
    }
}

/// Values given on the command line win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n_debris: Option<usize>,
    pub dv_cap: Option<f64>,
    pub episodes: Option<u64>,
    pub ppo_seed: Option<u64>,
    pub ga_seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.n_debris {
            self.n_debris = n;
        }
        if let Some(cap) = o.dv_cap {
            self.leg.dv_cap = cap;
        }
        if let Some(e) = o.episodes {
            self.ppo.total_episodes = e;
        }
        if let Some(s) = o.ppo_seed {
            self.ppo.seed = s;
        }
        if let Some(s) = o.ga_seed {
            self.ga.seed = s;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_debris == 0 {
            bail!("n_debris must be at least 1");
        }
        self.leg.validate().context("[leg]")?;
        self.ga.validate().context("[ga]")?;
        self.ppo.validate().context("[ppo]")?;
        self.parking.elements(0.0).context("[parking]")?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = toml::from_str("n_debris = 3\n[leg]\ndv_cap = 2.5\n").unwrap();
        assert_eq!(cfg.n_debris, 3);
        assert_eq!(cfg.leg.dv_cap, 2.5);
        assert_eq!(cfg.leg.tof_steps, LegCostConfig::default().tof_steps);
        assert_eq!(cfg.ppo, PpoConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("n_debris = 3\nepisodes = 4\n").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn overrides_change_the_hash() {
        let mut cfg = RunConfig::default();
        let before = cfg.hash();
        cfg.apply(&Overrides {
            episodes: Some(10),
            ..Overrides::default()
        });
        assert_eq!(cfg.ppo.total_episodes, 10);
        assert_ne!(cfg.hash(), before);
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn zero_debris_is_invalid() {
        let cfg = RunConfig {
            n_debris: 0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
