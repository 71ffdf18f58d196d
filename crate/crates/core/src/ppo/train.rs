use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::masked_distribution;
use super::network::{Adam, Architecture, ForwardCache, MlpPolicy, Topology};
use super::rollout::{RolloutBuffer, Transition};
use super::update::{ppo_update, UpdateReport};
use super::{PpoConfig, PpoError};
use crate::env::{observation_len, DebrisEnv, EnvError};
use crate::mission::{LegCostConfig, Scenario, SequenceResult};
use crate::scenarios::ScenarioSampler;

/// Where training episodes come from.
pub trait ScenarioSource {
    fn n_debris(&self) -> usize;
    fn draw(&mut self, rng: &mut ChaCha8Rng) -> Scenario;
}

impl ScenarioSource for ScenarioSampler {
    fn n_debris(&self) -> usize {
        self.n_debris
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) -> Scenario {
        self.sample(rng)
    }
}

/// The same scenario on every reset.
#[derive(Debug, Clone)]
pub struct FixedScenario(pub Scenario);

impl ScenarioSource for FixedScenario {
    fn n_debris(&self) -> usize {
        self.0.len()
    }

    fn draw(&mut self, _rng: &mut ChaCha8Rng) -> Scenario {
        self.0.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub episode: u64,
    pub cumulative_reward: f64,
    pub ttr_seconds: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: MlpPolicy,
    pub log: Vec<TrainLogRow>,
    pub updates: Vec<UpdateReport>,
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Collects `n_steps` transitions at a time over fresh scenarios and runs one
/// update per full buffer, until `total_episodes` episodes have finished.
/// Steps left over in a partially filled buffer at the end are not trained on.
pub fn train<S: ScenarioSource + ?Sized>(
    source: &mut S,
    cfg: &PpoConfig,
    leg_cfg: &LegCostConfig,
) -> Result<TrainOutcome, PpoError> {
    cfg.validate()?;
    let n = source.n_debris();
    let env_err = |episode: u64| move |source: EnvError| PpoError::Env { episode, source };
    let mut env = DebrisEnv::new(*leg_cfg)
        .map_err(env_err(0))?
        .with_r_norm(cfg.r_norm);
    let topology = match cfg.architecture {
        Architecture::Dense => Topology::new(observation_len(n), cfg.hidden.clone(), n),
        Architecture::PerDebris => Topology::per_debris(n, cfg.hidden.clone()),
    };
    let mut policy = MlpPolicy::new(topology, cfg.r_norm, &mut seeded(cfg.seed, 0))?;
    let mut scenario_rng = seeded(cfg.seed, 1);
    let mut action_rng = seeded(cfg.seed, 2);
    let mut batch_rng = seeded(cfg.seed, 3);
    let mut optimizer = Adam::new(policy.params.len(), cfg.learning_rate);
    let mut buffer = RolloutBuffer::new(cfg.n_steps);
    let mut log = Vec::new();
    let mut updates = Vec::new();

    let mut episode = 0u64;
    if cfg.total_episodes == 0 {
        return Ok(TrainOutcome { policy, log, updates });
    }
    let (mut obs, mut mask) = env.reset(source.draw(&mut scenario_rng));
    let (mut ep_reward, mut ep_ttr, mut ep_steps) = (0.0, 0.0, 0usize);
    while episode < cfg.total_episodes {
        let (logits, value) = policy.forward(&obs.values);
        let dist = masked_distribution(&logits, &mask)?;
        let action = dist.sample(&mut action_rng);
        let out = env.step(action).map_err(env_err(episode))?;
        buffer.push(Transition {
            observation: std::mem::take(&mut obs.values),
            action,
            reward: out.reward,
            done: out.done,
            value,
            log_prob: dist.log_prob(action),
            mask: std::mem::take(&mut mask),
        })?;
        ep_reward += out.reward;
        ep_ttr += out.leg_time;
        ep_steps += 1;
        if out.done {
            log.push(TrainLogRow {
                episode,
                cumulative_reward: ep_reward,
                ttr_seconds: ep_ttr,
                steps: ep_steps,
            });
            (ep_reward, ep_ttr, ep_steps) = (0.0, 0.0, 0);
            episode += 1;
            if episode == cfg.total_episodes {
                break;
            }
            (obs, mask) = env.reset(source.draw(&mut scenario_rng));
        } else {
            (obs, mask) = (out.observation, out.mask);
        }
        if buffer.is_full() {
            let (_, bootstrap) = policy.forward(&obs.values);
            buffer.finish(bootstrap, cfg.gamma, cfg.gae_lambda);
            let report = ppo_update(&buffer, &mut policy, &mut optimizer, cfg, &mut batch_rng)?;
            log::info!(
                "update {}: episodes {episode}, policy loss {:.4}, value loss {:.4}, entropy {:.3}",
                updates.len() + 1,
                report.policy_loss,
                report.value_loss,
                report.entropy
            );
            updates.push(report);
            buffer.clear();
        }
    }
    Ok(TrainOutcome { policy, log, updates })
}

/// Deterministic rollout: the most probable allowed debris at every step.
pub fn policy_solve(
    scenario: &Scenario,
    policy: &MlpPolicy,
    leg_cfg: &LegCostConfig,
) -> Result<SequenceResult, PpoError> {
    if policy.n_actions() != scenario.len() {
        return Err(PpoError::DebrisCount {
            expected: policy.n_actions(),
            got: scenario.len(),
        });
    }
    let env_err = |source| PpoError::Env { episode: 0, source };
    let mut env = DebrisEnv::new(*leg_cfg)
        .map_err(env_err)?
        .with_r_norm(policy.r_norm);
    let (mut obs, mut mask) = env.reset(scenario.clone());
    let mut cache = ForwardCache::default();
    loop {
        policy.forward_cached(&obs.values, &mut cache);
        let action = masked_distribution(&cache.logits, &mask)?.argmax();
        let out = env.step(action).map_err(env_err)?;
        if out.done {
            break;
        }
        (obs, mask) = (out.observation, out.mask);
    }
    Ok(env.result().expect("episode is complete"))
}

pub fn write_train_log<W: Write>(rows: &[TrainLogRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astro::GravParams;
    use crate::mission::ParkingOrbit;
    use crate::scenarios::{make_scenarios, SplitPart};
    use crate::sequencing::check_permutation;
    use crate::tle::{split_dataset, synthetic_cloud, CloudSpec};

    fn scenario(n: usize) -> Scenario {
        let split = split_dataset(&synthetic_cloud(&CloudSpec::default(), 1), 2).unwrap();
        make_scenarios(&split, SplitPart::Train, n, 1, 4, &ParkingOrbit::default(), GravParams::earth())
            .unwrap()
            .remove(0)
    }

    fn small_cfg(total_episodes: u64) -> PpoConfig {
        PpoConfig {
            n_steps: 64,
            batch_size: 16,
            epochs_per_update: 2,
            total_episodes,
            seed: 5,
            hidden: vec![16],
            ..PpoConfig::default()
        }
    }

    #[test]
    fn zero_episodes_returns_initial_policy() {
        let leg = LegCostConfig::default();
        let mut src = FixedScenario(scenario(3));
        let a = train(&mut src, &small_cfg(0), &leg).unwrap();
        let b = train(&mut src, &small_cfg(40), &leg).unwrap();
        assert!(a.log.is_empty() && a.updates.is_empty());
        assert_ne!(a.policy.params, b.policy.params);
        // Same initialization stream for both runs.
        let fresh = MlpPolicy::new(a.policy.topology.clone(), a.policy.r_norm, &mut seeded(5, 0)).unwrap();
        assert_eq!(a.policy, fresh);
    }

    #[test]
    fn training_is_deterministic() {
        let leg = LegCostConfig::default();
        let cfg = small_cfg(50);
        let a = train(&mut FixedScenario(scenario(3)), &cfg, &leg).unwrap();
        let b = train(&mut FixedScenario(scenario(3)), &cfg, &leg).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.policy.params, b.policy.params);
        assert_eq!(a.log.len(), 50);
        assert!(a.log.iter().all(|r| r.steps == 3));
        assert_eq!(a.updates.len(), 150 / 64);
    }

    #[test]
    fn untrained_policy_yields_permutation() {
        let leg = LegCostConfig::default();
        let s = scenario(5);
        let out = train(&mut FixedScenario(s.clone()), &small_cfg(0), &leg).unwrap();
        let r = policy_solve(&s, &out.policy, &leg).unwrap();
        check_permutation(&r.order, 5).unwrap();
        let one = scenario(1);
        let out1 = train(&mut FixedScenario(one.clone()), &small_cfg(0), &leg).unwrap();
        assert_eq!(policy_solve(&one, &out1.policy, &leg).unwrap().order, vec![0]);
        assert!(matches!(
            policy_solve(&s, &out1.policy, &leg),
            Err(PpoError::DebrisCount { expected: 1, got: 5 })
        ));
    }

    #[test]
    fn log_csv_columns() {
        let rows = vec![TrainLogRow {
            episode: 0,
            cumulative_reward: 0.25,
            ttr_seconds: 9000.0,
            steps: 3,
        }];
        let mut buf = Vec::new();
        write_train_log(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "episode,cumulative_reward,ttr_seconds,steps\n0,0.25,9000.0,3\n"
        );
    }
}
