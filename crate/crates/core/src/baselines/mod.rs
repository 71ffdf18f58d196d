//! Reference sequencing heuristics and the exhaustive optimum.

mod exact;
mod genetic;
mod greedy;

pub use exact::{brute_force, brute_force_solve, MAX_BRUTE_FORCE};
pub use genetic::{
    flip_mutation, ga_solve, genetic, ordered_crossover, shuffle_mutation, Chromosome, GaConfig,
    GaOutcome,
};
pub use greedy::{greedy, greedy_solve};

use thiserror::Error;

use crate::mission::MissionError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("no feasible continuation after {visited} of {total} debris")]
    Stuck { visited: usize, total: usize },
    #[error("every candidate order is infeasible")]
    NoFeasibleOrder,
    #[error("exhaustive search is limited to {max} debris, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("chromosomes are not permutations of the same genes")]
    GeneMismatch,
    #[error(transparent)]
    Mission(#[from] MissionError),
}
