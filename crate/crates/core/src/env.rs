//! Sequential decision environment over a debris scenario.
//!
//! One action picks the next debris to visit. The leg is priced with
//! [`plan_leg`], the chaser jumps onto the target's orbit at arrival, and the
//! reward is `-T/T_max`, plus one on the step that completes the tour.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::{elements_to_state, StateVector};
use crate::mission::{
    plan_leg, post_rendezvous_state, LegCostConfig, LegPlan, MissionError, Scenario,
    SequenceResult,
};

/// Length scale for positions and semi-major axes in the observation, km.
/// Close to a low-orbit radius, so those features are of order one.
pub const R_NORM: f64 = 8_000.0;

/// Values per debris object before the chaser block.
pub const DEBRIS_FEATURES: usize = 9;

pub fn observation_len(n: usize) -> usize {
    10 * n + 3
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("action {action} is not allowed: {reason}")]
    InvalidAction { action: usize, reason: &'static str },
    #[error("episode is finished; call reset")]
    Terminal,
    #[error("no active episode; call reset")]
    NotStarted,
    #[error("episode aborted at step {step}: {source}")]
    Infeasible { step: usize, source: MissionError },
    #[error(transparent)]
    Config(#[from] MissionError),
}

/// Mutable episode state.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState {
    pub scenario: Scenario,
    pub epoch: f64,
    pub chaser: StateVector,
    pub visited: Vec<bool>,
    pub steps_done: usize,
}

impl ScenarioState {
    pub fn new(scenario: Scenario) -> Self {
        let n = scenario.len();
        Self {
            epoch: scenario.start_epoch,
            chaser: scenario.chaser_start,
            visited: vec![false; n],
            steps_done: 0,
            scenario,
        }
    }

    pub fn is_done(&self) -> bool {
        self.steps_done == self.visited.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub values: Vec<f64>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    /// Mask for the next decision; all false once done.
    pub mask: Vec<bool>,
    /// Leg duration T_t, s.
    pub leg_time: f64,
    pub leg: LegPlan,
    pub action: usize,
    /// Zero-based index of this step within the episode.
    pub step: usize,
    /// Mission epoch after the leg, s.
    pub epoch: f64,
}

/// Entry `j` is true iff debris `j` has not been visited.
pub fn action_mask(state: &ScenarioState) -> Result<Vec<bool>, EnvError> {
    if state.is_done() {
        return Err(EnvError::Terminal);
    }
    Ok(state.visited.iter().map(|v| !v).collect())
}

/// Builds the normalized observation vector for `state`.
pub fn observe(state: &ScenarioState, r_norm: f64, cfg: &LegCostConfig) -> Observation {
    let n = state.visited.len();
    let mut values = Vec::with_capacity(observation_len(n));
    for d in &state.scenario.debris {
        let el = d.elements.advanced(state.epoch - d.elements.epoch, cfg.mu);
        let r = elements_to_state(&el, cfg.mu).r;
        values.extend_from_slice(&[
            el.a / r_norm,
            el.e,
            el.i / PI,
            el.raan / TAU,
            el.argp / TAU,
            el.nu / TAU,
            r.x / r_norm,
            r.y / r_norm,
            r.z / r_norm,
        ]);
    }
    values.extend(state.chaser.r.iter().map(|c| c / r_norm));
    values.extend(state.visited.iter().map(|&v| if v { 1.0 } else { 0.0 }));
    Observation { values }
}

/// Reward of one step.
pub fn step_reward(leg_time: f64, t_max: f64, last: bool) -> f64 {
    let r = -leg_time / t_max;
    if last {
        r + 1.0
    } else {
        r
    }
}

/// Single-episode environment. Reusable across scenarios via [`DebrisEnv::reset`].
#[derive(Debug, Clone)]
pub struct DebrisEnv {
    cfg: LegCostConfig,
    r_norm: f64,
    state: Option<ScenarioState>,
    legs: Vec<LegPlan>,
    order: Vec<usize>,
}

impl DebrisEnv {
    pub fn new(cfg: LegCostConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            r_norm: R_NORM,
            state: None,
            legs: Vec::new(),
            order: Vec::new(),
        })
    }

    pub fn with_r_norm(mut self, r_norm: f64) -> Self {
        self.r_norm = r_norm;
        self
    }

    pub fn config(&self) -> &LegCostConfig {
        &self.cfg
    }

    pub fn r_norm(&self) -> f64 {
        self.r_norm
    }

    pub fn state(&self) -> Option<&ScenarioState> {
        self.state.as_ref()
    }

    pub fn reset(&mut self, scenario: Scenario) -> (Observation, Vec<bool>) {
        let state = ScenarioState::new(scenario);
        let obs = observe(&state, self.r_norm, &self.cfg);
        let mask = vec![true; state.visited.len()];
        self.state = Some(state);
        self.legs.clear();
        self.order.clear();
        (obs, mask)
    }

    pub fn mask(&self) -> Result<Vec<bool>, EnvError> {
        action_mask(self.state.as_ref().ok_or(EnvError::NotStarted)?)
    }

    pub fn observation(&self) -> Result<Observation, EnvError> {
        let state = self.state.as_ref().ok_or(EnvError::NotStarted)?;
        Ok(observe(state, self.r_norm, &self.cfg))
    }

    /// Flies to debris `action`. An infeasible leg ends the episode.
    pub fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        let cfg = self.cfg;
        let state = self.state.as_mut().ok_or(EnvError::NotStarted)?;
        if state.is_done() {
            return Err(EnvError::Terminal);
        }
        match state.visited.get(action) {
            None => {
                return Err(EnvError::InvalidAction {
                    action,
                    reason: "index out of range",
                })
            }
            Some(true) => {
                return Err(EnvError::InvalidAction {
                    action,
                    reason: "debris already visited",
                })
            }
            Some(false) => {}
        }
        let step = state.steps_done;
        let target = &state.scenario.debris[action];
        let leg = plan_leg(&state.chaser, target, state.epoch, &cfg).and_then(|leg| {
            if leg.feasible {
                Ok(leg)
            } else {
                Err(MissionError::DeltaVExceeded {
                    target_id: action,
                    best_dv: leg.total_dv(),
                })
            }
        });
        let leg = match leg {
            Ok(leg) => leg,
            Err(source) => {
                self.state = None;
                return Err(EnvError::Infeasible { step, source });
            }
        };
        state.chaser = post_rendezvous_state(&state.chaser, &leg, target, cfg.mu);
        state.epoch = state.chaser.epoch;
        state.visited[action] = true;
        state.steps_done += 1;
        let done = state.is_done();
        let mask = state.visited.iter().map(|v| !v).collect();
        let observation = observe(state, self.r_norm, &cfg);
        let epoch = state.epoch;
        self.legs.push(leg);
        self.order.push(action);
        Ok(StepOutcome {
            observation,
            reward: step_reward(leg.leg_time, cfg.t_max, done),
            done,
            mask,
            leg_time: leg.leg_time,
            leg,
            action,
            step,
            epoch,
        })
    }

    /// The flown tour, once the episode is complete.
    pub fn result(&self) -> Option<SequenceResult> {
        let state = self.state.as_ref()?;
        state.is_done().then(|| SequenceResult {
            order: self.order.clone(),
            legs: self.legs.clone(),
            total_ttr: self.legs.iter().map(|l| l.leg_time).sum(),
        })
    }
}

/// One row of the episode trace log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub episode_id: u64,
    pub step: usize,
    pub action: usize,
    #[serde(rename = "T_t_seconds")]
    pub t_t_seconds: f64,
    pub reward: f64,
    pub epoch_s: f64,
}

impl TraceRow {
    pub fn new(episode_id: u64, outcome: &StepOutcome) -> Self {
        Self {
            episode_id,
            step: outcome.step,
            action: outcome.action,
            t_t_seconds: outcome.leg_time,
            reward: outcome.reward,
            epoch_s: outcome.epoch,
        }
    }
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(rows: &[TraceRow], path: &Path) -> csv::Result<()> {
    write_trace(rows, std::fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astro::GravParams;
    use crate::mission::{simulate_sequence, ParkingOrbit};
    use crate::scenarios::{make_scenarios, SplitPart};
    use crate::tle::{split_dataset, synthetic_cloud, CloudSpec};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenarios(n: usize, count: usize) -> Vec<Scenario> {
        let split = split_dataset(&synthetic_cloud(&CloudSpec::default(), 1), 2).unwrap();
        make_scenarios(&split, SplitPart::Train, n, count, 5, &ParkingOrbit::default(), GravParams::earth())
            .unwrap()
    }

    #[test]
    fn reset_shape_and_determinism() {
        let s = scenarios(10, 1).remove(0);
        let mut env = DebrisEnv::new(LegCostConfig::default()).unwrap();
        let (o1, m1) = env.reset(s.clone());
        let (o2, m2) = env.reset(s);
        assert_eq!(o1.len(), 103);
        assert_eq!(m1, vec![true; 10]);
        assert_eq!((o1, m1), (o2, m2));
    }

    #[test]
    fn observation_layout() {
        let s = scenarios(3, 1).remove(0);
        let cfg = LegCostConfig::default();
        let state = ScenarioState::new(s.clone());
        let obs = observe(&state, R_NORM, &cfg);
        let d = &s.debris[1];
        let r = d.state_at(s.start_epoch, cfg.mu).r;
        let base = DEBRIS_FEATURES;
        assert!((obs.values[base + 6] - r.x / R_NORM).abs() < 1e-12);
        assert!((obs.values[base + 8] - r.z / R_NORM).abs() < 1e-12);
        assert!((obs.values[base + 2] - d.elements.i / PI).abs() < 1e-15);
        assert!((obs.values[27] - s.chaser_start.r.x / R_NORM).abs() < 1e-15);
        assert_eq!(&obs.values[30..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn masks_follow_visits() {
        let s = scenarios(4, 1).remove(0);
        let mut state = ScenarioState::new(s);
        assert_eq!(action_mask(&state).unwrap(), vec![true; 4]);
        state.visited = vec![true, false, true, false];
        state.steps_done = 2;
        assert_eq!(action_mask(&state).unwrap(), vec![false, true, false, true]);
        state.visited = vec![true; 4];
        state.steps_done = 4;
        assert_eq!(action_mask(&state), Err(EnvError::Terminal));
    }

    #[test]
    fn reward_endpoints() {
        assert_eq!(step_reward(12_000.0, 12_000.0, false), -1.0);
        assert_eq!(step_reward(0.0, 12_000.0, false), 0.0);
        assert_eq!(step_reward(6_000.0, 12_000.0, true), 0.5);
    }

    #[test]
    fn episode_matches_simulated_sequence() {
        let cfg = LegCostConfig::default();
        let mut env = DebrisEnv::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in scenarios(5, 10) {
            let mut order: Vec<usize> = (0..5).collect();
            order.shuffle(&mut rng);
            env.reset(s.clone());
            let mut total = 0.0;
            let mut dones = 0;
            for &a in &order {
                let out = env.step(a).unwrap();
                total += out.reward;
                if out.done {
                    dones += 1;
                } else {
                    assert!((-1.0..=0.0).contains(&out.reward));
                }
            }
            assert_eq!(dones, 1);
            let reference = simulate_sequence(&s, &order, &cfg).unwrap();
            assert_eq!(env.result().unwrap(), reference);
            assert!((total - (1.0 - reference.total_ttr / cfg.t_max)).abs() < 1e-12);
            assert_eq!(env.step(order[0]), Err(EnvError::Terminal));
        }
    }

    #[test]
    fn invalid_actions_are_errors() {
        let s = scenarios(3, 1).remove(0);
        let mut env = DebrisEnv::new(LegCostConfig::default()).unwrap();
        assert_eq!(env.step(0), Err(EnvError::NotStarted));
        env.reset(s);
        env.step(1).unwrap();
        assert!(matches!(env.step(1), Err(EnvError::InvalidAction { action: 1, .. })));
        assert!(matches!(env.step(7), Err(EnvError::InvalidAction { action: 7, .. })));
        assert_eq!(env.mask().unwrap(), vec![true, false, true]);
    }

    #[test]
    fn infeasible_leg_aborts() {
        let s = scenarios(2, 1).remove(0);
        let cfg = LegCostConfig {
            dv_cap: 0.0,
            ..LegCostConfig::default()
        };
        let mut env = DebrisEnv::new(cfg).unwrap();
        env.reset(s);
        assert!(matches!(env.step(0), Err(EnvError::Infeasible { step: 0, .. })));
        assert_eq!(env.step(1), Err(EnvError::NotStarted));
    }

    #[test]
    fn trace_csv_header() {
        let s = scenarios(2, 1).remove(0);
        let mut env = DebrisEnv::new(LegCostConfig::default()).unwrap();
        env.reset(s);
        let rows: Vec<TraceRow> = [0, 1]
            .iter()
            .map(|&a| TraceRow::new(3, &env.step(a).unwrap()))
            .collect();
        let mut buf = Vec::new();
        write_trace(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("episode_id,step,action,T_t_seconds,reward,epoch_s\n3,0,0,"));
        assert_eq!(text.lines().count(), 3);
    }
}
