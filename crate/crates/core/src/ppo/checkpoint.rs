//! JSON policy checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::network::MlpPolicy;
use super::{PpoConfig, PpoError};
use crate::mission::LegCostConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

/// SHA-256 over the JSON encoding of both configurations.
pub fn config_hash(ppo: &PpoConfig, leg: &LegCostConfig) -> String {
    let text = serde_json::to_string(&(ppo, leg)).expect("configs serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub policy: MlpPolicy,
    pub ppo: PpoConfig,
    pub leg: LegCostConfig,
    pub config_hash: String,
}

impl Checkpoint {
    pub fn new(policy: MlpPolicy, ppo: PpoConfig, leg: LegCostConfig) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config_hash: config_hash(&ppo, &leg),
            policy,
            ppo,
            leg,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), PpoError> {
        let text = serde_json::to_string(self).map_err(|e| PpoError::Checkpoint(e.to_string()))?;
        std::fs::write(path, text)
            .map_err(|e| PpoError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, PpoError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PpoError::Checkpoint(format!("{}: {e}", path.display())))?;
        let ck: Self = serde_json::from_str(&text)
            .map_err(|e| PpoError::Checkpoint(format!("{}: {e}", path.display())))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(PpoError::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        if ck.config_hash != config_hash(&ck.ppo, &ck.leg) {
            return Err(PpoError::Checkpoint("config hash does not match its configs".into()));
        }
        ck.policy.validate()?;
        Ok(ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::Topology;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn checkpoint() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let policy = MlpPolicy::new(Topology::new(13, vec![8, 8], 1), 50_000.0, &mut rng).unwrap();
        Checkpoint::new(policy, PpoConfig::default(), LegCostConfig::default())
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        let ck = checkpoint();
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
        assert_eq!(ck.config_hash.len(), 64);
    }

    #[test]
    fn hash_tracks_configs() {
        let a = config_hash(&PpoConfig::default(), &LegCostConfig::default());
        let b = config_hash(&PpoConfig { seed: 1, ..PpoConfig::default() }, &LegCostConfig::default());
        assert_ne!(a, b);
    }

    #[test]
    fn rejects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        let mut ck = checkpoint();
        ck.ppo.seed = 99;
        ck.save(&path).unwrap();
        assert!(Checkpoint::load(&path).is_err());
        let mut ck = checkpoint();
        ck.policy.params.pop();
        ck.save(&path).unwrap();
        assert!(Checkpoint::load(&path).is_err());
        assert!(Checkpoint::load(&dir.path().join("missing.json")).is_err());
    }
}
