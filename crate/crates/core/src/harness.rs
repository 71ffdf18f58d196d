//! Method comparison runs, summary statistics and their CSV forms.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{brute_force_solve, ga_solve, greedy_solve, GaConfig, SolverError, MAX_BRUTE_FORCE};
use crate::mission::{LegCostConfig, Scenario, SequenceResult};
use crate::ppo::{policy_solve, MlpPolicy, PpoError};
use crate::sequencing::check_permutation;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("the ppo method needs a trained policy; run `train` and pass its checkpoint")]
    MissingPolicy,
    #[error("policy was trained for {expected} debris but scenario {scenario_id} has {got}")]
    PolicySize {
        scenario_id: usize,
        expected: usize,
        got: usize,
    },
    #[error("exact search supports at most {max} debris, scenario {scenario_id} has {got}")]
    ExactTooLarge {
        scenario_id: usize,
        max: usize,
        got: usize,
    },
    #[error("baseline average must be positive, got {0}")]
    Baseline(f64),
    #[error("unknown method {0:?} (expected greedy, genetic, ppo or exact)")]
    UnknownMethod(String),
    #[error("malformed order {0:?}")]
    Order(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Greedy,
    Genetic,
    Ppo,
    Exact,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Greedy, Method::Genetic, Method::Ppo, Method::Exact];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Genetic => "genetic",
            Method::Ppo => "ppo",
            Method::Exact => "exact",
        }
    }

    /// Label used in the statistics tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Greedy => "Greedy",
            Method::Genetic => "Genetic",
            Method::Ppo => "PPO",
            Method::Exact => "Exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| HarnessError::UnknownMethod(s.to_string()))
    }
}

/// One (scenario, method) result.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario_id: usize,
    pub method: Method,
    pub order: Vec<usize>,
    pub total_ttr: f64,
    /// Wall-clock seconds of the solve call alone.
    pub execution_time: f64,
    pub seed: u64,
}

/// A (scenario, method) pair that produced no feasible tour.
#[derive(Debug, Clone, PartialEq)]
pub struct Infeasibility {
    pub scenario_id: usize,
    pub method: Method,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ttr,
    ExecutionTime,
}

impl Metric {
    fn suffix(self) -> &'static str {
        match self {
            Metric::Ttr => "TTR",
            Metric::ExecutionTime => "Execution Time",
        }
    }

    fn of(self, r: &RunRecord) -> f64 {
        match self {
            Metric::Ttr => r.total_ttr,
            Metric::ExecutionTime => r.execution_time,
        }
    }
}

/// Count, sum, mean and sample variance of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    #[serde(rename = "Groups")]
    pub group: String,
    #[serde(rename = "Count")]
    pub count: usize,
    #[serde(rename = "Sum")]
    pub sum: f64,
    #[serde(rename = "Average")]
    pub average: f64,
    #[serde(rename = "Variance")]
    pub variance: f64,
}

impl StatsSummary {
    /// Single pass (Welford). A single value has variance 0.
    pub fn from_values(group: impl Into<String>, values: &[f64]) -> Self {
        let (mut mean, mut m2) = (0.0, 0.0);
        for (k, &x) in values.iter().enumerate() {
            let d = x - mean;
            mean += d / (k + 1) as f64;
            m2 += d * (x - mean);
        }
        let count = values.len();
        Self {
            group: group.into(),
            count,
            sum: values.iter().sum(),
            average: if count > 0 { mean } else { 0.0 },
            variance: if count > 1 { m2 / (count - 1) as f64 } else { 0.0 },
        }
    }

    /// Rebuilds a summary from published totals.
    pub fn from_totals(group: impl Into<String>, count: usize, sum: f64, variance: f64) -> Self {
        Self {
            group: group.into(),
            count,
            sum,
            average: sum / count as f64,
            variance,
        }
    }
}

/// Per-method summaries of `metric`, in the order methods first appear.
pub fn summarize(records: &[RunRecord], metric: Metric) -> Vec<StatsSummary> {
    let mut methods: Vec<Method> = Vec::new();
    for r in records {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.method == m)
                .map(|r| metric.of(r))
                .collect();
            StatsSummary::from_values(format!("{} {}", m.label(), metric.suffix()), &values)
        })
        .collect()
}

/// Percentage by which `candidate_avg` improves on `baseline_avg`.
pub fn improvement_pct(baseline_avg: f64, candidate_avg: f64) -> Result<f64, HarnessError> {
    if !(baseline_avg > 0.0) {
        return Err(HarnessError::Baseline(baseline_avg));
    }
    Ok(100.0 * (baseline_avg - candidate_avg) / baseline_avg)
}

#[derive(Debug, Clone)]
pub struct CompareConfig<'a> {
    pub leg: LegCostConfig,
    pub ga: GaConfig,
    pub policy: Option<&'a MlpPolicy>,
    /// Written to each record's `seed` column.
    pub seed: u64,
    /// Each solve runs this many times; the recorded time is the mean.
    pub timing_repeats: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Comparison {
    pub records: Vec<RunRecord>,
    pub infeasible: Vec<Infeasibility>,
}

impl Comparison {
    pub fn ttr_stats(&self) -> Vec<StatsSummary> {
        summarize(&self.records, Metric::Ttr)
    }

    pub fn time_stats(&self) -> Vec<StatsSummary> {
        summarize(&self.records, Metric::ExecutionTime)
    }

    pub fn mean(&self, method: Method, metric: Metric) -> Option<f64> {
        let values: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.method == method)
            .map(|r| metric.of(r))
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    /// Fraction of scenarios with at least one infeasible method.
    pub fn infeasible_fraction(&self, n_scenarios: usize) -> f64 {
        if n_scenarios == 0 {
            return 0.0;
        }
        let mut ids: Vec<usize> = self.infeasible.iter().map(|i| i.scenario_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len() as f64 / n_scenarios as f64
    }
}

enum SolveFailure {
    Solver(SolverError),
    Policy(PpoError),
}

impl fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveFailure::Solver(e) => e.fmt(f),
            SolveFailure::Policy(e) => e.fmt(f),
        }
    }
}

fn solve(
    method: Method,
    scenario: &Scenario,
    cfg: &CompareConfig,
) -> (Result<SequenceResult, SolveFailure>, Duration) {
    let start = Instant::now();
    let result = match method {
        Method::Greedy => greedy_solve(scenario, &cfg.leg).map_err(SolveFailure::Solver),
        Method::Genetic => ga_solve(scenario, &cfg.leg, &cfg.ga).map_err(SolveFailure::Solver),
        Method::Exact => brute_force_solve(scenario, &cfg.leg).map_err(SolveFailure::Solver),
        Method::Ppo => policy_solve(scenario, cfg.policy.expect("checked by caller"), &cfg.leg)
            .map_err(SolveFailure::Policy),
    };
    (result, start.elapsed())
}

/// Runs every method on every scenario with the same leg configuration.
///
/// Only the solve call is timed. Infeasible runs are collected rather than
/// failing the comparison.
pub fn run_compare(
    scenarios: &[Scenario],
    methods: &[Method],
    cfg: &CompareConfig,
) -> Result<Comparison, HarnessError> {
    if methods.contains(&Method::Ppo) && cfg.policy.is_none() {
        return Err(HarnessError::MissingPolicy);
    }
    for (scenario_id, s) in scenarios.iter().enumerate() {
        if let (true, Some(policy)) = (methods.contains(&Method::Ppo), cfg.policy) {
            if policy.n_actions() != s.len() {
                return Err(HarnessError::PolicySize {
                    scenario_id,
                    expected: policy.n_actions(),
                    got: s.len(),
                });
            }
        }
        if methods.contains(&Method::Exact) && s.len() > MAX_BRUTE_FORCE {
            return Err(HarnessError::ExactTooLarge {
                scenario_id,
                max: MAX_BRUTE_FORCE,
                got: s.len(),
            });
        }
    }
    let mut out = Comparison::default();
    for (scenario_id, s) in scenarios.iter().enumerate() {
        for &method in methods {
            let (result, mut elapsed) = solve(method, s, cfg);
            let repeats = cfg.timing_repeats.max(1);
            for _ in 1..repeats {
                elapsed += solve(method, s, cfg).1;
            }
            let elapsed = elapsed / repeats as u32;
            match result {
                Ok(r) => out.records.push(RunRecord {
                    scenario_id,
                    method,
                    order: r.order,
                    total_ttr: r.total_ttr,
                    execution_time: elapsed.as_secs_f64(),
                    seed: cfg.seed,
                }),
                Err(e) => {
                    log::warn!("scenario {scenario_id}, {method}: {e}");
                    out.infeasible.push(Infeasibility {
                        scenario_id,
                        method,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    scenario_id: usize,
    method: Method,
    order: String,
    total_ttr_s: f64,
    execution_time_s: f64,
    seed: u64,
}

pub fn format_order(order: &[usize]) -> String {
    order.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

pub fn parse_order(text: &str) -> Result<Vec<usize>, HarnessError> {
    let order = text
        .split('-')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| HarnessError::Order(text.to_string()))?;
    check_permutation(&order, order.len()).map_err(|_| HarnessError::Order(text.to_string()))?;
    Ok(order)
}

pub fn write_records<W: Write>(records: &[RunRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(RecordRow {
            scenario_id: r.scenario_id,
            method: r.method,
            order: format_order(&r.order),
            total_ttr_s: r.total_ttr,
            execution_time_s: r.execution_time,
            seed: r.seed,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>, HarnessError> {
    csv::Reader::from_reader(input)
        .deserialize::<RecordRow>()
        .map(|row| {
            let row = row?;
            Ok(RunRecord {
                scenario_id: row.scenario_id,
                method: row.method,
                order: parse_order(&row.order)?,
                total_ttr: row.total_ttr_s,
                execution_time: row.execution_time_s,
                seed: row.seed,
            })
        })
        .collect()
}

pub fn write_stats<W: Write>(stats: &[StatsSummary], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for s in stats {
        w.serialize(s)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
