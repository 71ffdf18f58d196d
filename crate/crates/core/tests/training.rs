use debris_core::astro::GravParams;
use debris_core::mission::{LegCostConfig, ParkingOrbit};
use debris_core::ppo::{train, FixedScenario, PpoConfig};
use debris_core::scenarios::{make_scenarios, SplitPart};
use debris_core::tle::{split_dataset, synthetic_cloud, CloudSpec};

fn moving_average(xs: &[f64], window: usize) -> (f64, f64) {
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    (mean(&xs[..window]), mean(&xs[xs.len() - window..]))
}

#[test]
fn reward_trends_upward_on_fixed_three_debris() {
    let split = split_dataset(&synthetic_cloud(&CloudSpec::default(), 21), 4).unwrap();
    let scenario = make_scenarios(&split, SplitPart::Train, 3, 1, 8, &ParkingOrbit::default(), GravParams::earth())
        .unwrap()
        .remove(0);
    let cfg = PpoConfig {
        total_episodes: 2000,
        seed: 3,
        ..PpoConfig::default()
    };
    let out = train(&mut FixedScenario(scenario), &cfg, &LegCostConfig::default()).unwrap();
    let rewards: Vec<f64> = out.log.iter().map(|r| r.cumulative_reward).collect();
    assert_eq!(rewards.len(), 2000);
    let (start, end) = moving_average(&rewards, 100);
    assert!(end > start, "moving average {start} -> {end}");
}
