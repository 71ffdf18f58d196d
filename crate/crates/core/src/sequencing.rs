//! Abstract sequencing cost used by every solver.
//!
//! Solvers only see a start state and a function from (current state,
//! target) to (leg time, next state). The orbital stack implements it in
//! [`crate::mission::OrbitalCost`]; [`StaticCostTable`] gives hand-checkable
//! instances for tests.

use serde::{Deserialize, Serialize};

pub trait SequencingCost {
    type State: Clone;
    type Error: std::error::Error + Clone + 'static;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn start(&self) -> Self::State;

    /// Leg time to `target` from `state` and the state after arrival.
    fn leg(&self, state: &Self::State, target: usize) -> Result<(f64, Self::State), Self::Error>;
}

/// A visitation order with its per-leg times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    pub leg_times: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("leg {leg_index} to {target} failed: {source}")]
pub struct TourError<E: std::error::Error + 'static> {
    pub leg_index: usize,
    pub target: usize,
    pub source: E,
}

/// `Ok(())` iff `order` contains each of `0..n` exactly once.
pub fn check_permutation(order: &[usize], n: usize) -> Result<(), String> {
    if order.len() != n {
        return Err(format!("expected {n} entries, got {}", order.len()));
    }
    let mut seen = vec![false; n];
    for &j in order {
        if j >= n {
            return Err(format!("index {j} out of range for {n} debris"));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(format!("index {j} appears twice"));
        }
    }
    Ok(())
}

/// Folds the legs of `order` from the start state.
pub fn evaluate<C: SequencingCost>(cost: &C, order: &[usize]) -> Result<Tour, TourError<C::Error>> {
    let mut state = cost.start();
    let mut leg_times = Vec::with_capacity(order.len());
    for (leg_index, &target) in order.iter().enumerate() {
        let (t, next) = cost.leg(&state, target).map_err(|source| TourError {
            leg_index,
            target,
            source,
        })?;
        leg_times.push(t);
        state = next;
    }
    Ok(Tour {
        order: order.to_vec(),
        total: leg_times.iter().sum(),
        leg_times,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("leg to {target} is marked infeasible")]
pub struct TableInfeasible {
    pub target: usize,
}

/// Static (time-independent) leg costs: `start[j]` from the parking orbit,
/// `table[i][j]` from node `i` to node `j`. Non-finite entries are infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticCostTable {
    pub start: Vec<f64>,
    pub table: Vec<Vec<f64>>,
}

impl StaticCostTable {
    pub fn new(start: Vec<f64>, table: Vec<Vec<f64>>) -> Self {
        assert!(table.iter().all(|row| row.len() == start.len()));
        assert_eq!(table.len(), start.len());
        Self { start, table }
    }
}

impl SequencingCost for StaticCostTable {
    type State = Option<usize>;
    type Error = TableInfeasible;

    fn len(&self) -> usize {
        self.start.len()
    }

    fn start(&self) -> Option<usize> {
        None
    }

    fn leg(&self, state: &Option<usize>, target: usize) -> Result<(f64, Option<usize>), TableInfeasible> {
        let cost = match state {
            None => self.start[target],
            Some(i) => self.table[*i][target],
        };
        if cost.is_finite() {
            Ok((cost, Some(target)))
        } else {
            Err(TableInfeasible { target })
        }
    }
}
