//! Rendezvous leg pricing and sequence simulation.
//!
//! Each leg is a two-impulse Lambert transfer that departs immediately from
//! the chaser's current state. The transfer time is picked from a uniform
//! grid: the shortest time of flight whose total Δv fits under the per-leg
//! cap wins. After arrival the chaser shares the target's orbit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::{AstroError, GravParams, KeplerianElements, StateVector};
use crate::lambert::{solve_lambert, Direction};
use crate::sequencing::{check_permutation, SequencingCost};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MissionError {
    #[error("invalid leg configuration: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("chaser epoch {chaser} s does not match departure epoch {departure} s")]
    EpochMismatch { chaser: f64, departure: f64 },
    #[error("no grid point yields a valid transfer to debris {target_id}")]
    LegGeometry { target_id: usize },
    #[error("debris {target_id} unreachable within the Δv cap (best {best_dv:.4} km/s)")]
    DeltaVExceeded { target_id: usize, best_dv: f64 },
    #[error("leg {leg_index} (debris {target_id}) is infeasible: {reason}")]
    SequenceInfeasible {
        leg_index: usize,
        target_id: usize,
        reason: Box<MissionError>,
    },
    #[error("invalid visitation order: {0}")]
    Order(String),
    #[error(transparent)]
    Astro(#[from] AstroError),
}

/// A debris object with its elements on the mission clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebrisObject {
    pub id: usize,
    pub name: String,
    pub norad_id: u32,
    pub elements: KeplerianElements,
}

impl DebrisObject {
    pub fn state_at(&self, epoch: f64, mu: GravParams) -> StateVector {
        self.elements.state_at(epoch, mu)
    }
}

/// A debris field plus the chaser's parking orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub debris: Vec<DebrisObject>,
    pub chaser_start: StateVector,
    pub start_epoch: f64,
}

impl Scenario {
    /// Re-indexes debris ids to their positions and checks the invariants.
    pub fn new(
        mut debris: Vec<DebrisObject>,
        chaser_start: StateVector,
    ) -> Result<Self, MissionError> {
        if debris.is_empty() {
            return Err(MissionError::Scenario("no debris".into()));
        }
        for (k, d) in debris.iter_mut().enumerate() {
            d.id = k;
            d.elements.validate()?;
        }
        if chaser_start.r.norm() == 0.0 {
            return Err(MissionError::Scenario("chaser position is zero".into()));
        }
        Ok(Self {
            debris,
            start_epoch: chaser_start.epoch,
            chaser_start,
        })
    }

    pub fn len(&self) -> usize {
        self.debris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.debris.is_empty()
    }
}

/// Parking orbit in degrees, as written in scenario and config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParkingOrbit {
    pub a_km: f64,
    pub e: f64,
    pub i_deg: f64,
    pub raan_deg: f64,
    pub argp_deg: f64,
    pub nu_deg: f64,
}

impl Default for ParkingOrbit {
    fn default() -> Self {
        Self {
            a_km: 7100.0,
            e: 0.0,
            i_deg: 86.4,
            raan_deg: 120.0,
            argp_deg: 0.0,
            nu_deg: 0.0,
        }
    }
}

impl ParkingOrbit {
    pub fn elements(&self, epoch: f64) -> Result<KeplerianElements, AstroError> {
        KeplerianElements::new(
            self.a_km,
            self.e,
            self.i_deg.to_radians(),
            self.raan_deg.to_radians(),
            self.argp_deg.to_radians(),
            self.nu_deg.to_radians(),
            epoch,
        )
    }

    pub fn state(&self, epoch: f64, mu: GravParams) -> Result<StateVector, AstroError> {
        Ok(crate::astro::elements_to_state(&self.elements(epoch)?, mu))
    }
}

/// Per-leg pricing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LegCostConfig {
    pub tof_min: f64,
    pub tof_max: f64,
    pub tof_steps: usize,
    /// Cap on dv1 + dv2, km/s.
    pub dv_cap: f64,
    /// Reward normalization constant, s.
    pub t_max: f64,
    pub mu: GravParams,
    pub direction: Direction,
}

impl Default for LegCostConfig {
    fn default() -> Self {
        Self {
            tof_min: 300.0,
            tof_max: 12_000.0,
            tof_steps: 64,
            dv_cap: 4.0,
            t_max: 12_000.0,
            mu: GravParams::earth(),
            direction: Direction::Prograde,
        }
    }
}

impl LegCostConfig {
    pub fn validate(&self) -> Result<(), MissionError> {
        let err = |m: String| Err(MissionError::Config(m));
        if !(self.tof_min > 0.0 && self.tof_min < self.tof_max) {
            return err(format!(
                "need 0 < tof_min < tof_max, got {} and {}",
                self.tof_min, self.tof_max
            ));
        }
        if self.tof_steps < 2 {
            return err(format!("tof_steps must be at least 2, got {}", self.tof_steps));
        }
        if self.t_max < self.tof_max {
            return err(format!(
                "t_max ({}) must be at least tof_max ({})",
                self.t_max, self.tof_max
            ));
        }
        if self.dv_cap.is_nan() || self.dv_cap < 0.0 {
            return err(format!("dv_cap must be non-negative, got {}", self.dv_cap));
        }
        if !(self.mu.mu > 0.0) {
            return err(format!("mu must be positive, got {}", self.mu.mu));
        }
        Ok(())
    }

    /// The k-th point of the uniform time-of-flight grid.
    pub fn grid_tof(&self, k: usize) -> f64 {
        if k + 1 == self.tof_steps {
            return self.tof_max;
        }
        self.tof_min + (self.tof_max - self.tof_min) * k as f64 / (self.tof_steps - 1) as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.tof_steps).map(|k| self.grid_tof(k))
    }
}

/// One priced transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegPlan {
    pub target_id: usize,
    pub departure_epoch: f64,
    pub tof: f64,
    pub dv1: f64,
    pub dv2: f64,
    pub leg_time: f64,
    pub feasible: bool,
}

impl LegPlan {
    pub fn total_dv(&self) -> f64 {
        self.dv1 + self.dv2
    }

    pub fn arrival_epoch(&self) -> f64 {
        self.departure_epoch + self.tof
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub order: Vec<usize>,
    pub legs: Vec<LegPlan>,
    pub total_ttr: f64,
}

/// Δv of the transfer at one grid point, or `None` when Lambert rejects it.
pub fn price_transfer(
    chaser: &StateVector,
    target: &DebrisObject,
    tof: f64,
    cfg: &LegCostConfig,
) -> Option<(f64, f64)> {
    let arrival = target.state_at(chaser.epoch + tof, cfg.mu);
    let sol = solve_lambert(&chaser.r, &arrival.r, tof, cfg.mu, cfg.direction).ok()?;
    Some(((sol.v1 - chaser.v).norm(), (arrival.v - sol.v2).norm()))
}

/// Prices the rendezvous with `target` departing at `epoch`.
///
/// Returns the smallest grid time of flight whose total Δv is within the
/// cap. When no grid point fits, the minimum-Δv grid point is returned with
/// `feasible = false`. Grid points Lambert cannot solve are skipped.
pub fn plan_leg(
    chaser: &StateVector,
    target: &DebrisObject,
    epoch: f64,
    cfg: &LegCostConfig,
) -> Result<LegPlan, MissionError> {
    if chaser.epoch != epoch {
        return Err(MissionError::EpochMismatch {
            chaser: chaser.epoch,
            departure: epoch,
        });
    }
    let plan = |tof: f64, dv1: f64, dv2: f64, feasible: bool| LegPlan {
        target_id: target.id,
        departure_epoch: epoch,
        tof,
        dv1,
        dv2,
        leg_time: tof,
        feasible,
    };
    let mut best: Option<LegPlan> = None;
    for tof in cfg.grid() {
        let Some((dv1, dv2)) = price_transfer(chaser, target, tof, cfg) else {
            continue;
        };
        if dv1 + dv2 <= cfg.dv_cap {
            return Ok(plan(tof, dv1, dv2, true));
        }
        if best.is_none_or(|b| dv1 + dv2 < b.total_dv()) {
            best = Some(plan(tof, dv1, dv2, false));
        }
    }
    best.ok_or(MissionError::LegGeometry {
        target_id: target.id,
    })
}

/// Chaser state right after rendezvous: the target's own state at arrival.
pub fn post_rendezvous_state(
    _chaser: &StateVector,
    plan: &LegPlan,
    target: &DebrisObject,
    mu: GravParams,
) -> StateVector {
    target.state_at(plan.arrival_epoch(), mu)
}

/// Flies `order` from the parking orbit and sums the leg times.
pub fn simulate_sequence(
    scenario: &Scenario,
    order: &[usize],
    cfg: &LegCostConfig,
) -> Result<SequenceResult, MissionError> {
    cfg.validate()?;
    check_permutation(order, scenario.len()).map_err(MissionError::Order)?;
    let mut chaser = scenario.chaser_start;
    let mut legs = Vec::with_capacity(order.len());
    for (leg_index, &target_id) in order.iter().enumerate() {
        let target = &scenario.debris[target_id];
        let wrap = |reason: MissionError| MissionError::SequenceInfeasible {
            leg_index,
            target_id,
            reason: Box::new(reason),
        };
        let leg = plan_leg(&chaser, target, chaser.epoch, cfg).map_err(wrap)?;
        if !leg.feasible {
            return Err(wrap(MissionError::DeltaVExceeded {
                target_id,
                best_dv: leg.total_dv(),
            }));
        }
        chaser = post_rendezvous_state(&chaser, &leg, target, cfg.mu);
        legs.push(leg);
    }
    Ok(SequenceResult {
        order: order.to_vec(),
        total_ttr: legs.iter().map(|l| l.leg_time).sum(),
        legs,
    })
}

/// The orbital sequencing problem seen through [`SequencingCost`].
#[derive(Debug, Clone, Copy)]
pub struct OrbitalCost<'a> {
    pub scenario: &'a Scenario,
    pub cfg: &'a LegCostConfig,
}

impl<'a> OrbitalCost<'a> {
    pub fn new(scenario: &'a Scenario, cfg: &'a LegCostConfig) -> Result<Self, MissionError> {
        cfg.validate()?;
        Ok(Self { scenario, cfg })
    }
}

impl SequencingCost for OrbitalCost<'_> {
    type State = StateVector;
    type Error = MissionError;

    fn len(&self) -> usize {
        self.scenario.len()
    }

    fn start(&self) -> StateVector {
        self.scenario.chaser_start
    }

    fn leg(&self, chaser: &StateVector, target: usize) -> Result<(f64, StateVector), MissionError> {
        let debris = &self.scenario.debris[target];
        let leg = plan_leg(chaser, debris, chaser.epoch, self.cfg)?;
        if !leg.feasible {
            return Err(MissionError::DeltaVExceeded {
                target_id: target,
                best_dv: leg.total_dv(),
            });
        }
        Ok((
            leg.leg_time,
            post_rendezvous_state(chaser, &leg, debris, self.cfg.mu),
        ))
    }
}
