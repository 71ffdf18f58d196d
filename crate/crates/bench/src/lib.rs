//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use debris_core::astro::GravParams;
use debris_core::mission::{ParkingOrbit, Scenario};
use debris_core::ppo::{MlpPolicy, Topology};
use debris_core::scenarios::{make_scenarios, SplitPart};
use debris_core::tle::{split_dataset, synthetic_cloud, CloudSpec};

/// Eval-split scenarios from the default synthetic cloud.
pub fn eval_scenarios(n_debris: usize, count: usize) -> Vec<Scenario> {
    let split = split_dataset(&synthetic_cloud(&CloudSpec::default(), 2023), 7).expect("default cloud splits");
    make_scenarios(
        &split,
        SplitPart::Eval,
        n_debris,
        count,
        77,
        &ParkingOrbit::default(),
        GravParams::earth(),
    )
    .expect("eval split is large enough")
}

/// Untrained policy of the default shape; decoding cost does not depend on training.
pub fn policy(n_debris: usize) -> MlpPolicy {
    MlpPolicy::new(
        Topology::per_debris(n_debris, vec![64, 64]),
        debris_core::env::R_NORM,
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .expect("valid topology")
}
