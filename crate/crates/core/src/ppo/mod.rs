//! Maskable PPO: policy network, masked categorical, GAE, clipped update,
//! training loop and checkpoints.

mod checkpoint;
mod distribution;
mod network;
mod rollout;
mod train;
mod update;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, R_NORM};

pub use checkpoint::{config_hash, Checkpoint, CHECKPOINT_VERSION};
pub use distribution::{masked_distribution, MaskedCategorical};
pub use network::{clip_grad_norm, Activation, Architecture, Adam, ForwardCache, MlpPolicy, Topology};
pub use rollout::{compute_gae, RolloutBuffer, Transition};
pub use train::{
    policy_solve, train, write_train_log, FixedScenario, ScenarioSource, TrainLogRow, TrainOutcome,
};
pub use update::{clipped_surrogate, minibatch_loss, ppo_update, BatchLoss, Sample, UpdateReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpoError {
    #[error("invalid PPO configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("mask allows no action")]
    EmptyMask,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("rollout buffer: {0}")]
    Buffer(String),
    #[error("policy expects {expected} debris, scenario has {got}")]
    DebrisCount { expected: usize, got: usize },
    #[error("environment failed in episode {episode}: {source}")]
    Env { episode: u64, source: EnvError },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub learning_rate: f64,
    pub n_steps: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_range: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub ent_coef: f64,
    pub epochs_per_update: usize,
    pub total_episodes: u64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub architecture: Architecture,
    /// Observation length scale, km.
    pub r_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            n_steps: 2048,
            batch_size: 64,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_range: 0.2,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            ent_coef: 0.0,
            epochs_per_update: 10,
            total_episodes: 20_000,
            seed: 0,
            hidden: vec![64, 64],
            architecture: Architecture::PerDebris,
            r_norm: R_NORM,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |msg: &str| Err(PpoError::Config(msg.into()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(self.gae_lambda > 0.0 && self.gae_lambda <= 1.0) {
            return bad("gae_lambda must be in (0, 1]");
        }
        if !(self.clip_range > 0.0) {
            return bad("clip_range must be positive");
        }
        if self.batch_size == 0 || self.batch_size > self.n_steps {
            return bad("batch_size must be in 1..=n_steps");
        }
        if !(self.learning_rate > 0.0 && self.max_grad_norm > 0.0 && self.r_norm > 0.0) {
            return bad("learning_rate, max_grad_norm and r_norm must be positive");
        }
        if !(self.vf_coef >= 0.0 && self.ent_coef >= 0.0) {
            return bad("loss coefficients must be non-negative");
        }
        if self.epochs_per_update == 0 {
            return bad("epochs_per_update must be positive");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty and positive");
        }
        Ok(())
    }
}
