use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::astro::GravParams;

use super::TleRecord;

/// Shape of a synthetic fragmentation cloud around a common parent orbit.
///
/// The defaults resemble a young near-polar LEO breakup: a few tens of km
/// of semi-major axis spread and a narrow band of node longitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CloudSpec {
    pub count: usize,
    pub name: String,
    pub first_norad_id: u32,
    pub epoch_year: i32,
    pub epoch_day: f64,
    /// Element epochs are spread uniformly over this many days.
    pub epoch_spread_days: f64,
    pub sma_km: f64,
    pub sma_spread_km: f64,
    pub inclination_deg: f64,
    pub inclination_spread_deg: f64,
    pub raan_deg: f64,
    pub raan_spread_deg: f64,
    pub max_eccentricity: f64,
}

impl Default for CloudSpec {
    fn default() -> Self {
        Self {
            count: 100,
            name: "IRIDIUM 33 DEB".into(),
            first_norad_id: 33_772,
            epoch_year: 2023,
            epoch_day: 327.0,
            epoch_spread_days: 3.0,
            sma_km: 7150.0,
            sma_spread_km: 40.0,
            inclination_deg: 86.4,
            inclination_spread_deg: 0.3,
            raan_deg: 120.0,
            raan_spread_deg: 1.0,
            max_eccentricity: 0.004,
        }
    }
}

/// Generates `spec.count` element sets. Values are quantized to the TLE
/// field precision so that writing and re-reading them is lossless.
pub fn synthetic_cloud(spec: &CloudSpec, seed: u64) -> Vec<TleRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = GravParams::earth();
    let sym = |rng: &mut ChaCha8Rng, half: f64| {
        if half > 0.0 {
            rng.random_range(-half..half)
        } else {
            0.0
        }
    };
    let quant = |x: f64, digits: i32| {
        let s = 10f64.powi(digits);
        (x * s).round() / s
    };
    let mut next_id = spec.first_norad_id;
    (0..spec.count)
        .map(|k| {
            let a = spec.sma_km + sym(&mut rng, spec.sma_spread_km);
            let n = mu.mean_motion(a) * 86_400.0 / std::f64::consts::TAU;
            let rec = TleRecord {
                name: format!("{} {}", spec.name, k + 1),
                norad_id: next_id,
                epoch_year: spec.epoch_year,
                epoch_day: quant(
                    spec.epoch_day + rng.random_range(0.0..spec.epoch_spread_days.max(1e-9)),
                    8,
                ),
                inclination: quant(
                    spec.inclination_deg + sym(&mut rng, spec.inclination_spread_deg),
                    4,
                )
                .clamp(0.0, 180.0)
                .to_radians(),
                raan: quant(
                    (spec.raan_deg + sym(&mut rng, spec.raan_spread_deg)).rem_euclid(360.0),
                    4,
                )
                .rem_euclid(360.0)
                .to_radians(),
                eccentricity: quant(rng.random_range(0.0..spec.max_eccentricity.max(1e-7)), 7),
                argp: quant(rng.random_range(0.0..360.0), 4).rem_euclid(360.0).to_radians(),
                mean_anomaly: quant(rng.random_range(0.0..360.0), 4).rem_euclid(360.0).to_radians(),
                mean_motion: quant(n, 8),
            };
            next_id += 1 + rng.random_range(0..3);
            rec
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tle::{format_tle, parse_tle};

    #[test]
    fn cloud_round_trips_through_text() {
        let cloud = synthetic_cloud(&CloudSpec::default(), 3);
        assert_eq!(cloud.len(), 100);
        for rec in &cloud {
            let [n, l1, l2] = format_tle(rec);
            let back = parse_tle(&n, &l1, &l2).unwrap();
            assert_eq!(back.norad_id, rec.norad_id);
            assert!((back.inclination - rec.inclination).abs() < 1e-12);
            assert!((back.mean_motion - rec.mean_motion).abs() < 1e-12);
        }
        let mut ids: Vec<_> = cloud.iter().map(|r| r.norad_id).collect();
        ids.dedup();
        assert_eq!(ids.len(), 100);
    }

    #[test]
    fn seeded() {
        let spec = CloudSpec { count: 10, ..CloudSpec::default() };
        assert_eq!(synthetic_cloud(&spec, 1), synthetic_cloud(&spec, 1));
        assert_ne!(synthetic_cloud(&spec, 1), synthetic_cloud(&spec, 2));
    }
}
