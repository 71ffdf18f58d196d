use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mission::{simulate_sequence, LegCostConfig, OrbitalCost, Scenario, SequenceResult};
use crate::sequencing::{check_permutation, evaluate, SequencingCost, Tour};

use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    /// Probability that a mutation is a shuffle rather than a flip.
    pub shuffle_vs_flip_prob: f64,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 300,
            crossover_prob: 0.7,
            mutation_prob: 0.2,
            shuffle_vs_flip_prob: 0.5,
            tournament_size: 3,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
            ("shuffle_vs_flip_prob", self.shuffle_vs_flip_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SolverError::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.population_size < 2 {
            return Err(SolverError::Config("population_size must be at least 2".into()));
        }
        if self.tournament_size == 0 {
            return Err(SolverError::Config("tournament_size must be positive".into()));
        }
        Ok(())
    }
}

/// A visitation order as evolved by the GA.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<usize>,
}

impl Chromosome {
    pub fn new(genes: Vec<usize>) -> Self {
        Self { genes }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

/// Goldberg's ordered crossover.
///
/// The child keeps `p1[cut1..cut2]` in place. The remaining slots, starting
/// at `cut2` and wrapping around, receive the genes of `p2` read cyclically
/// from `cut2`, skipping genes already in the child.
pub fn ordered_crossover(
    p1: &Chromosome,
    p2: &Chromosome,
    cut1: usize,
    cut2: usize,
) -> Result<Chromosome, SolverError> {
    let n = p1.len();
    if p2.len() != n || check_permutation(&p1.genes, n).is_err() || check_permutation(&p2.genes, n).is_err() {
        return Err(SolverError::GeneMismatch);
    }
    if !(cut1 < cut2 && cut2 <= n) {
        return Err(SolverError::Config(format!(
            "crossover cuts must satisfy 0 <= cut1 < cut2 <= {n}, got ({cut1}, {cut2})"
        )));
    }
    let mut child = vec![usize::MAX; n];
    let mut present = vec![false; n];
    for k in cut1..cut2 {
        child[k] = p1.genes[k];
        present[p1.genes[k]] = true;
    }
    let mut slot = cut2 % n;
    for k in 0..n {
        let gene = p2.genes[(cut2 + k) % n];
        if present[gene] {
            continue;
        }
        child[slot] = gene;
        present[gene] = true;
        slot = (slot + 1) % n;
        if slot == cut1 {
            slot = cut2 % n;
        }
    }
    Ok(Chromosome::new(child))
}

/// Seeded uniform reshuffle of all genes.
pub fn shuffle_mutation(c: &Chromosome, seed: u64) -> Chromosome {
    shuffle_with(c, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn shuffle_with<R: Rng>(c: &Chromosome, rng: &mut R) -> Chromosome {
    let mut genes = c.genes.clone();
    genes.shuffle(rng);
    Chromosome::new(genes)
}

/// Reverses the gene order.
pub fn flip_mutation(c: &Chromosome) -> Chromosome {
    Chromosome::new(c.genes.iter().rev().copied().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub tour: Tour,
    /// Best-ever total after initialization and after each generation.
    pub best_history: Vec<f64>,
    /// Distinct orders evaluated.
    pub evaluations: usize,
}

/// Fitness is the negated total time; infeasible orders get −∞ and lose
/// every tournament against a feasible one.
struct Fitness<'a, C: SequencingCost> {
    cost: &'a C,
    cache: HashMap<Vec<usize>, Option<Tour>>,
}

impl<C: SequencingCost> Fitness<'_, C> {
    fn total(&mut self, c: &Chromosome) -> f64 {
        let cost = self.cost;
        self.cache
            .entry(c.genes.clone())
            .or_insert_with(|| evaluate(cost, &c.genes).ok())
            .as_ref()
            .map_or(f64::INFINITY, |t| t.total)
    }
}

pub fn genetic<C: SequencingCost>(cost: &C, ga: &GaConfig) -> Result<GaOutcome, SolverError> {
    ga.validate()?;
    let n = cost.len();
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);
    let mut fitness = Fitness {
        cost,
        cache: HashMap::new(),
    };

    let identity = Chromosome::new((0..n).collect());
    let mut population: Vec<Chromosome> = (0..ga.population_size)
        .map(|_| shuffle_with(&identity, &mut rng))
        .collect();
    let mut totals: Vec<f64> = population.iter().map(|c| fitness.total(c)).collect();

    let argbest = |totals: &[f64]| {
        totals
            .iter()
            .enumerate()
            .fold(0, |b, (k, &t)| if t < totals[b] { k } else { b })
    };
    let mut best = population[argbest(&totals)].clone();
    let mut best_total = totals[argbest(&totals)];
    let mut history = vec![best_total];

    for _ in 0..ga.generations {
        let mut offspring: Vec<Chromosome> = (0..ga.population_size)
            .map(|_| {
                let winner = (0..ga.tournament_size)
                    .map(|_| rng.random_range(0..population.len()))
                    .reduce(|a, b| if totals[b] < totals[a] { b } else { a })
                    .unwrap();
                population[winner].clone()
            })
            .collect();

        if n >= 2 {
            for pair in offspring.chunks_exact_mut(2) {
                if rng.random::<f64>() < ga.crossover_prob {
                    let cut1 = rng.random_range(0..n);
                    let cut2 = rng.random_range(cut1 + 1..=n);
                    let a = ordered_crossover(&pair[0], &pair[1], cut1, cut2)?;
                    let b = ordered_crossover(&pair[1], &pair[0], cut1, cut2)?;
                    pair[0] = a;
                    pair[1] = b;
                }
            }
        }
        for child in offspring.iter_mut() {
            if rng.random::<f64>() < ga.mutation_prob {
                *child = if rng.random::<f64>() < ga.shuffle_vs_flip_prob {
                    shuffle_with(child, &mut rng)
                } else {
                    flip_mutation(child)
                };
            }
        }
        debug_assert!(offspring.iter().all(|c| check_permutation(&c.genes, n).is_ok()));

        totals = offspring.iter().map(|c| fitness.total(c)).collect();
        // Elitism: the best-ever individual replaces the worst offspring.
        let worst = totals
            .iter()
            .enumerate()
            .fold(0, |w, (k, &t)| if t > totals[w] { k } else { w });
        offspring[worst] = best.clone();
        totals[worst] = best_total;
        population = offspring;

        let k = argbest(&totals);
        if totals[k] < best_total {
            best_total = totals[k];
            best = population[k].clone();
        }
        history.push(best_total);
    }

    if !best_total.is_finite() {
        return Err(SolverError::NoFeasibleOrder);
    }
    let tour = fitness.cache[&best.genes].clone().expect("finite total implies a tour");
    Ok(GaOutcome {
        tour,
        best_history: history,
        evaluations: fitness.cache.len(),
    })
}

pub fn ga_solve(
    scenario: &Scenario,
    cfg: &LegCostConfig,
    ga: &GaConfig,
) -> Result<SequenceResult, SolverError> {
    let outcome = genetic(&OrbitalCost::new(scenario, cfg)?, ga)?;
    Ok(simulate_sequence(scenario, &outcome.tour.order, cfg)?)
}
