//! Turning element sets into mission scenarios.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::{GravParams, StateVector};
use crate::mission::{DebrisObject, MissionError, ParkingOrbit, Scenario};
use crate::tle::{tle_to_elements, DatasetSplit, TleError, TleRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("cannot draw {n_debris} debris from a pool of {pool}")]
    PoolTooSmall { n_debris: usize, pool: usize },
    #[error("debris count must be positive")]
    NoDebris,
    #[error("empty record set")]
    NoRecords,
    #[error("NORAD id {0} is not in the record set")]
    UnknownNorad(u32),
    #[error(transparent)]
    Tle(#[from] TleError),
    #[error(transparent)]
    Mission(#[from] MissionError),
}

/// Which part of a [`DatasetSplit`] to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Test,
    Eval,
}

impl SplitPart {
    pub fn of(self, split: &DatasetSplit) -> &[TleRecord] {
        match self {
            SplitPart::Train => &split.train,
            SplitPart::Test => &split.test,
            SplitPart::Eval => &split.eval,
        }
    }
}

/// Shared clock and chaser settings for a family of scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionClock {
    /// Unix seconds of the mission-time origin (earliest TLE epoch).
    pub reference_unix: f64,
    /// Mission time at which the chaser leaves the parking orbit.
    pub start_epoch: f64,
}

impl MissionClock {
    /// Origin at the earliest epoch, departure at the latest one.
    pub fn from_records<'a>(
        records: impl IntoIterator<Item = &'a TleRecord>,
    ) -> Result<Self, ScenarioError> {
        let (first, last) = records
            .into_iter()
            .map(TleRecord::epoch_unix_seconds)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
        if !first.is_finite() {
            return Err(ScenarioError::NoRecords);
        }
        Ok(Self {
            reference_unix: first,
            start_epoch: last - first,
        })
    }
}

/// Debris pool plus chaser start, sampling `n_debris` objects per scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSampler {
    pub pool: Vec<DebrisObject>,
    pub n_debris: usize,
    pub chaser_start: StateVector,
}

pub fn debris_from_records(
    records: &[TleRecord],
    reference_unix: f64,
    mu: GravParams,
) -> Result<Vec<DebrisObject>, ScenarioError> {
    records
        .iter()
        .enumerate()
        .map(|(k, rec)| {
            let (elements, _) = tle_to_elements(rec, mu, reference_unix)?;
            Ok(DebrisObject {
                id: k,
                name: rec.name.clone(),
                norad_id: rec.norad_id,
                elements,
            })
        })
        .collect()
}

impl ScenarioSampler {
    pub fn new(
        records: &[TleRecord],
        clock: MissionClock,
        n_debris: usize,
        parking: &ParkingOrbit,
        mu: GravParams,
    ) -> Result<Self, ScenarioError> {
        if n_debris == 0 {
            return Err(ScenarioError::NoDebris);
        }
        if n_debris > records.len() {
            return Err(ScenarioError::PoolTooSmall {
                n_debris,
                pool: records.len(),
            });
        }
        Ok(Self {
            pool: debris_from_records(records, clock.reference_unix, mu)?,
            n_debris,
            chaser_start: parking
                .state(clock.start_epoch, mu)
                .map_err(MissionError::from)?,
        })
    }

    /// Draws `n_debris` distinct objects, in draw order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Scenario {
        let picks = sample(rng, self.pool.len(), self.n_debris);
        let debris = picks.iter().map(|k| self.pool[k].clone()).collect();
        Scenario::new(debris, self.chaser_start).expect("pool entries are validated")
    }

    /// Builds a scenario from explicit NORAD ids.
    pub fn from_norad_ids(&self, ids: &[u32]) -> Result<Scenario, ScenarioError> {
        let debris = ids
            .iter()
            .map(|id| {
                self.pool
                    .iter()
                    .find(|d| d.norad_id == *id)
                    .cloned()
                    .ok_or(ScenarioError::UnknownNorad(*id))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Scenario::new(debris, self.chaser_start)?)
    }
}

/// Seeded scenario list drawn without replacement from one split part.
pub fn make_scenarios(
    split: &DatasetSplit,
    part: SplitPart,
    n_debris: usize,
    count: usize,
    seed: u64,
    parking: &ParkingOrbit,
    mu: GravParams,
) -> Result<Vec<Scenario>, ScenarioError> {
    let clock = MissionClock::from_records(split.all())?;
    let sampler = ScenarioSampler::new(part.of(split), clock, n_debris, parking, mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.sample(&mut rng)).collect())
}
