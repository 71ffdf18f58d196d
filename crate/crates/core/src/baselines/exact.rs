use crate::mission::{simulate_sequence, LegCostConfig, OrbitalCost, Scenario, SequenceResult};
use crate::sequencing::{evaluate, SequencingCost, Tour};

use super::SolverError;

pub const MAX_BRUTE_FORCE: usize = 8;

/// Evaluates every permutation in lexicographic order and keeps the
/// strictly best, so ties resolve to the lexicographically smallest order.
pub fn brute_force<C: SequencingCost>(cost: &C) -> Result<Tour, SolverError> {
    let n = cost.len();
    if n > MAX_BRUTE_FORCE {
        return Err(SolverError::TooLarge {
            n,
            max: MAX_BRUTE_FORCE,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<Tour> = None;
    loop {
        if let Ok(tour) = evaluate(cost, &order) {
            if best.as_ref().is_none_or(|b| tour.total < b.total) {
                best = Some(tour);
            }
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    best.ok_or(SolverError::NoFeasibleOrder)
}

pub fn brute_force_solve(
    scenario: &Scenario,
    cfg: &LegCostConfig,
) -> Result<SequenceResult, SolverError> {
    let tour = brute_force(&OrbitalCost::new(scenario, cfg)?)?;
    Ok(simulate_sequence(scenario, &tour.order, cfg)?)
}

/// Advances to the next lexicographic permutation; false after the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
