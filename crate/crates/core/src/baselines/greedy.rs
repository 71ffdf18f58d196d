use crate::mission::{simulate_sequence, LegCostConfig, OrbitalCost, Scenario, SequenceResult};
use crate::sequencing::{SequencingCost, Tour};

use super::SolverError;

/// Nearest-in-time heuristic: from the current state, visit the debris with
/// the shortest leg time next. Ties go to the lowest index. Infeasible
/// candidates are passed over; if none remain the run fails.
pub fn greedy<C: SequencingCost>(cost: &C) -> Result<Tour, SolverError> {
    let n = cost.len();
    let mut visited = vec![false; n];
    let mut state = cost.start();
    let mut order = Vec::with_capacity(n);
    let mut leg_times = Vec::with_capacity(n);
    for step in 0..n {
        let mut best: Option<(usize, f64, C::State)> = None;
        for j in (0..n).filter(|&j| !visited[j]) {
            let Ok((t, next)) = cost.leg(&state, j) else {
                continue;
            };
            if best.as_ref().is_none_or(|(_, bt, _)| t < *bt) {
                best = Some((j, t, next));
            }
        }
        let (j, t, next) = best.ok_or(SolverError::Stuck {
            visited: step,
            total: n,
        })?;
        visited[j] = true;
        order.push(j);
        leg_times.push(t);
        state = next;
    }
    Ok(Tour {
        order,
        total: leg_times.iter().sum(),
        leg_times,
    })
}

pub fn greedy_solve(scenario: &Scenario, cfg: &LegCostConfig) -> Result<SequenceResult, SolverError> {
    let tour = greedy(&OrbitalCost::new(scenario, cfg)?)?;
    Ok(simulate_sequence(scenario, &tour.order, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequencing::StaticCostTable;

    #[test]
    fn follows_cheapest_edges() {
        let inf = f64::INFINITY;
        let t = StaticCostTable::new(
            vec![3.0, 1.0, 2.0],
            vec![vec![inf, 4.0, 1.0], vec![5.0, inf, 2.0], vec![1.0, 9.0, inf]],
        );
        let tour = greedy(&t).unwrap();
        assert_eq!(tour.order, vec![1, 2, 0]);
        assert_eq!(tour.total, 4.0);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let t = StaticCostTable::new(vec![1.0, 1.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(greedy(&t).unwrap().order, vec![0, 1]);
    }

    #[test]
    fn skips_infeasible_and_reports_dead_ends() {
        let inf = f64::INFINITY;
        let t = StaticCostTable::new(vec![1.0, 5.0], vec![vec![0.0, inf], vec![1.0, 0.0]]);
        // Going to 0 first strands the tour.
        assert_eq!(greedy(&t), Err(SolverError::Stuck { visited: 1, total: 2 }));
        let t = StaticCostTable::new(vec![inf, 5.0], vec![vec![0.0, inf], vec![1.0, 0.0]]);
        assert_eq!(greedy(&t).unwrap().order, vec![1, 0]);
    }
}
