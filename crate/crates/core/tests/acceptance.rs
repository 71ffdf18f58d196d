//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.
//!
//! Criteria 3, 5, 6 and 7 share one trained policy (n = 5, 20 000 episodes).

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use debris_core::astro::{elements_to_state, propagate, GravParams, KeplerianElements};
use debris_core::baselines::{brute_force, greedy, GaConfig};
use debris_core::env::DebrisEnv;
use debris_core::harness::{
    improvement_pct, run_compare, CompareConfig, Comparison, Method, Metric, StatsSummary,
};
use debris_core::lambert::{solve_lambert, Direction};
use debris_core::mission::{simulate_sequence, LegCostConfig, ParkingOrbit, Scenario};
use debris_core::ppo::{
    compute_gae, masked_distribution, minibatch_loss, train, MlpPolicy, PpoConfig, Sample, Topology,
    Transition,
};
use debris_core::scenarios::{make_scenarios, MissionClock, ScenarioSampler, SplitPart};
use debris_core::sequencing::StaticCostTable;
use debris_core::tle::{split_dataset, synthetic_cloud, CloudSpec, DatasetSplit};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn mu() -> GravParams {
    GravParams::earth()
}

/// Random elliptic orbit between a 6500 km perigee and a 45000 km apogee.
fn random_orbit(rng: &mut ChaCha8Rng) -> KeplerianElements {
    let e: f64 = rng.random_range(0.0..0.7);
    let max_perigee = 45_000.0 * (1.0 - e) / (1.0 + e);
    let a = rng.random_range(6_500.0..max_perigee.max(6_500.1)) / (1.0 - e);
    KeplerianElements::new(
        a,
        e,
        rng.random_range(0.0..PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        0.0,
    )
    .unwrap()
}

fn rel(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Transfer geometries with |sin θ| below this are excluded from criterion 1.
const NEAR_PI_EXCLUSION: f64 = 1e-2;

fn lambert_round_trip() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut cases, mut excluded, mut failures) = (0, 0, 0);
    let mut worst = 0.0f64;
    while cases < 1000 {
        let el = random_orbit(&mut rng);
        let s0 = elements_to_state(&el, mu());
        let dt = rng.random_range(0.0..0.8) * mu().period(el.a);
        if dt <= 0.0 {
            continue;
        }
        let s1 = propagate(&s0, dt, mu()).unwrap();
        let sin_theta = s0.r.cross(&s1.r).norm() / (s0.r.norm() * s1.r.norm());
        if sin_theta < NEAR_PI_EXCLUSION {
            excluded += 1;
            continue;
        }
        cases += 1;
        let direction = if s0.angular_momentum().z >= 0.0 {
            Direction::Prograde
        } else {
            Direction::Retrograde
        };
        match solve_lambert(&s0.r, &s1.r, dt, mu(), direction) {
            Ok(sol) => worst = worst.max(rel(&sol.v1, &s0.v)).max(rel(&sol.v2, &s1.v)),
            Err(_) => failures += 1,
        }
    }
    let elapsed = start.elapsed();
    verdict(
        failures == 0 && worst <= 1e-8 && elapsed < Duration::from_secs(5),
        format!(
            "1000 cases, {failures} failures, worst relative velocity error {worst:.2e} \
             ({excluded} draws excluded with |sin θ| < {NEAR_PI_EXCLUSION})"
        ),
    )
}

fn kepler_conservation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst_energy, mut worst_h, mut worst_flow) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let el = random_orbit(&mut rng);
        let s0 = elements_to_state(&el, mu());
        let period = mu().period(el.a);
        let t1 = rng.random_range(-2.0..2.0) * period;
        let t2 = rng.random_range(-2.0..2.0) * period;
        let s1 = propagate(&s0, t1, mu()).unwrap();
        let e0 = s0.specific_energy(mu());
        let h0 = s0.angular_momentum().norm();
        worst_energy = worst_energy.max(((s1.specific_energy(mu()) - e0) / e0).abs());
        worst_h = worst_h.max(((s1.angular_momentum().norm() - h0) / h0).abs());
        let composed = propagate(&s1, t2, mu()).unwrap();
        let direct = propagate(&s0, t1 + t2, mu()).unwrap();
        worst_flow = worst_flow.max((composed.r - direct.r).norm());
    }
    verdict(
        worst_energy <= 1e-10 && worst_h <= 1e-10 && worst_flow <= 1e-8,
        format!(
            "10000 propagations: energy {worst_energy:.2e}, |h| {worst_h:.2e} (rel), \
             flow composition {worst_flow:.2e} km"
        ),
    )
}

fn greedy_witness() -> Verdict {
    let table = StaticCostTable::new(
        vec![1.0, 2.0, 2.0],
        vec![
            vec![0.0, 1.0, 10.0],
            vec![1.0, 0.0, 10.0],
            vec![1.0, 1.0, 0.0],
        ],
    );
    let g = greedy(&table).unwrap();
    let b = brute_force(&table).unwrap();
    verdict(
        g.total > b.total,
        format!(
            "static table: greedy {:?} costs {}, optimum {:?} costs {}",
            g.order, g.total, b.order, b.total
        ),
    )
}

fn statistics_replay() -> Verdict {
    let rows = [
        ("Genetic TTR", 5_523_867.791, "55238.67791"),
        ("Greedy TTR", 5_697_144.916, "56971.44916"),
        ("PPO TTR", 4_918_592.247, "49185.92247"),
    ];
    let stats: Vec<StatsSummary> = rows
        .iter()
        .map(|(g, sum, _)| StatsSummary::from_totals(*g, 100, *sum, 0.0))
        .collect();
    let averages_ok = stats
        .iter()
        .zip(&rows)
        .all(|(s, (_, _, printed))| format!("{:.5}", s.average) == *printed);
    let vs_ga = improvement_pct(stats[0].average, stats[2].average).unwrap();
    let vs_greedy = improvement_pct(stats[1].average, stats[2].average).unwrap();
    verdict(
        averages_ok && (vs_ga - 10.96).abs() <= 0.01 && (vs_greedy - 13.66).abs() <= 0.01,
        format!(
            "averages {:.5} / {:.5} / {:.5}; improvement vs genetic {vs_ga:.4}%, vs greedy {vs_greedy:.4}%",
            stats[0].average, stats[1].average, stats[2].average
        ),
    )
}

fn reward_consistency(ctx: &Context) -> Verdict {
    let cfg = LegCostConfig::default();
    let mut env = DebrisEnv::new(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let sampler = ctx.train_sampler(5);
    let (mut worst, mut repeats) = (0.0f64, 0);
    for _ in 0..10_000 {
        let scenario = sampler.sample(&mut rng);
        let (_, mut mask) = env.reset(scenario.clone());
        let mut total_reward = 0.0;
        let mut seen = vec![false; scenario.len()];
        loop {
            let allowed: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
            let action = *allowed.choose(&mut rng).unwrap();
            repeats += usize::from(seen[action]);
            seen[action] = true;
            let out = env.step(action).unwrap();
            total_reward += out.reward;
            if out.done {
                break;
            }
            mask = out.mask;
        }
        let flown = env.result().unwrap();
        let reference = simulate_sequence(&scenario, &flown.order, &cfg).unwrap();
        worst = worst.max((total_reward - (1.0 - reference.total_ttr / cfg.t_max)).abs());
    }
    verdict(
        worst <= 1e-12 && repeats == 0,
        format!("10000 random episodes: worst |Σr − (1 − TTR/T_max)| = {worst:.1e}, {repeats} repeated visits"),
    )
}

fn ppo_numerics() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let cfg = PpoConfig {
        ent_coef: 0.03,
        ..PpoConfig::default()
    };
    let mut worst_grad = 0.0f64;
    for trial in 0..8 {
        let n = 2 + trial % 3;
        let topology = if trial % 2 == 0 {
            Topology::new(10 * n + 3, vec![6, 5], n)
        } else {
            Topology::per_debris(n, vec![5, 4])
        };
        let mut policy = MlpPolicy::new(topology, 1.0, &mut rng).unwrap();
        policy.params.iter_mut().for_each(|w| *w += rng.random_range(-0.3..0.3));
        let transitions: Vec<Transition> = (0..4)
            .map(|k| {
                let observation: Vec<f64> = (0..10 * n + 3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mut mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
                mask[k % n] = true;
                let (logits, _) = policy.forward(&observation);
                let dist = masked_distribution(&logits, &mask).unwrap();
                let action = dist.sample(&mut rng);
                Transition {
                    observation,
                    action,
                    reward: rng.random_range(-1.0..0.0),
                    done: k == 3,
                    value: rng.random_range(-1.0..1.0),
                    log_prob: dist.log_prob(action) + rng.random_range(-0.3..0.3),
                    mask,
                }
            })
            .collect();
        let batch: Vec<Sample> = transitions
            .iter()
            .map(|t| Sample {
                transition: t,
                advantage: rng.random_range(-2.0..2.0),
                ret: rng.random_range(-1.0..1.0),
            })
            .collect();
        let mut grad = vec![0.0; policy.params.len()];
        minibatch_loss(&policy, &batch, &cfg, Some(&mut grad)).unwrap();
        let h = 1e-6;
        for k in 0..grad.len() {
            let mut p = policy.clone();
            p.params[k] += h;
            let hi = minibatch_loss(&p, &batch, &cfg, None).unwrap().loss;
            p.params[k] -= 2.0 * h;
            let lo = minibatch_loss(&p, &batch, &cfg, None).unwrap().loss;
            let fd = (hi - lo) / (2.0 * h);
            worst_grad = worst_grad.max((fd - grad[k]).abs() / fd.abs().max(1e-5));
        }
    }

    let mut worst_gae = 0.0f64;
    for _ in 0..1000 {
        let len = rng.random_range(1..30);
        let rewards: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let bootstrap = rng.random_range(-2.0..2.0);
        let (adv, _) = compute_gae(&rewards, &values, &vec![false; len], bootstrap, 1.0, 1.0);
        for t in 0..len {
            let target = rewards[t..].iter().sum::<f64>() + bootstrap - values[t];
            worst_gae = worst_gae.max((adv[t] - target).abs());
        }
    }

    let dist = masked_distribution(&[3.0, -1.0, 2.5, 0.0, 4.0], &[false, true, true, false, true]).unwrap();
    let mut masked_draws = 0;
    for _ in 0..100_000 {
        let a = dist.sample(&mut rng);
        masked_draws += usize::from(!dist.mask[a]);
    }
    let exact_zero = dist.probs[0] == 0.0
        && dist.probs[3] == 0.0
        && dist.log_probs[0] == f64::NEG_INFINITY
        && dist.log_probs[3] == f64::NEG_INFINITY;

    verdict(
        worst_grad <= 1e-4 && worst_gae <= 1e-10 && masked_draws == 0 && exact_zero,
        format!(
            "gradient rel error {worst_grad:.1e} over 8 networks, GAE telescoping {worst_gae:.1e}, \
             {masked_draws} masked draws in 1e5, masked probabilities exactly zero: {exact_zero}"
        ),
    )
}

struct Trained {
    policy: MlpPolicy,
    elapsed: Duration,
    episodes: usize,
}

struct Context {
    split: DatasetSplit,
    policy: OnceCell<Trained>,
    eval: OnceCell<Comparison>,
}

impl Context {
    fn new() -> Self {
        Self {
            split: split_dataset(&synthetic_cloud(&CloudSpec::default(), 2023), 7).unwrap(),
            policy: OnceCell::new(),
            eval: OnceCell::new(),
        }
    }

    fn train_sampler(&self, n: usize) -> ScenarioSampler {
        let clock = MissionClock::from_records(self.split.all()).unwrap();
        ScenarioSampler::new(&self.split.train, clock, n, &ParkingOrbit::default(), mu()).unwrap()
    }

    fn scenarios(&self, part: SplitPart, count: usize, seed: u64) -> Vec<Scenario> {
        make_scenarios(&self.split, part, 5, count, seed, &ParkingOrbit::default(), mu()).unwrap()
    }

    fn trained(&self) -> &Trained {
        self.policy.get_or_init(|| {
            let cfg = PpoConfig {
                total_episodes: 20_000,
                seed: 42,
                ..PpoConfig::default()
            };
            let start = Instant::now();
            let out = train(&mut self.train_sampler(5), &cfg, &LegCostConfig::default()).unwrap();
            Trained {
                policy: out.policy,
                elapsed: start.elapsed(),
                episodes: out.log.len(),
            }
        })
    }

    fn compare(&self, scenarios: &[Scenario]) -> Comparison {
        let policy = &self.trained().policy;
        let cfg = CompareConfig {
            leg: LegCostConfig::default(),
            ga: GaConfig::default(),
            policy: Some(policy),
            seed: 0,
            timing_repeats: 5,
        };
        run_compare(scenarios, &Method::ALL, &cfg).unwrap()
    }

    fn eval(&self) -> &Comparison {
        self.eval.get_or_init(|| self.compare(&self.scenarios(SplitPart::Eval, 40, 77)))
    }
}

fn per_scenario(c: &Comparison, method: Method, n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; n];
    for r in c.records.iter().filter(|r| r.method == method) {
        out[r.scenario_id] = Some(r.total_ttr);
    }
    out
}

fn sandwich_and_ga(ctx: &Context) -> (Verdict, Verdict) {
    let scenarios = ctx.scenarios(SplitPart::Test, 50, 33);
    let start = Instant::now();
    let c = ctx.compare(&scenarios);
    let elapsed = start.elapsed();
    let exact = per_scenario(&c, Method::Exact, 50);
    let mut violations = 0;
    for m in [Method::Greedy, Method::Genetic, Method::Ppo] {
        for (k, total) in per_scenario(&c, m, 50).into_iter().enumerate() {
            match (exact[k], total) {
                (Some(b), Some(t)) if b <= t => {}
                _ => violations += 1,
            }
        }
    }
    let sandwich = verdict(
        violations == 0 && elapsed < Duration::from_secs(120) && c.infeasible.is_empty(),
        format!(
            "50 scenarios × 4 methods, {violations} violations, {} infeasible, {:.1} s",
            c.infeasible.len(),
            elapsed.as_secs_f64()
        ),
    );
    let ga = per_scenario(&c, Method::Genetic, 50);
    let (mut optimal, mut worst_gap) = (0, 0.0f64);
    for (g, b) in ga.iter().zip(&exact) {
        if let (Some(g), Some(b)) = (g, b) {
            if g == b {
                optimal += 1;
            } else {
                worst_gap = worst_gap.max(g / b - 1.0);
            }
        }
    }
    let ga_verdict = verdict(
        optimal >= 35 && worst_gap <= 0.10,
        format!("optimum found on {optimal}/50, worst gap otherwise {:.2}%", 100.0 * worst_gap),
    );
    (sandwich, ga_verdict)
}

fn ppo_learning(ctx: &Context) -> Verdict {
    let t = ctx.trained();
    let c = ctx.eval();
    let ppo = c.mean(Method::Ppo, Metric::Ttr).unwrap();
    let greedy = c.mean(Method::Greedy, Metric::Ttr).unwrap();
    let exact = c.mean(Method::Exact, Metric::Ttr).unwrap();
    let n = c.records.iter().filter(|r| r.method == Method::Ppo).count();
    verdict(
        n >= 30 && ppo <= greedy && ppo <= 1.05 * exact && t.elapsed < Duration::from_secs(1800),
        format!(
            "{n} eval scenarios: PPO {ppo:.0} s, greedy {greedy:.0} s, exact {exact:.0} s \
             (PPO/exact {:.3}); trained {} episodes in {:.0} s",
            ppo / exact,
            t.episodes,
            t.elapsed.as_secs_f64()
        ),
    )
}

fn execution_order(ctx: &Context) -> Verdict {
    let c = ctx.eval();
    let time = |m| c.mean(m, Metric::ExecutionTime).unwrap();
    let (ppo, greedy, ga) = (time(Method::Ppo), time(Method::Greedy), time(Method::Genetic));
    verdict(
        ppo < greedy && greedy < ga,
        format!(
            "mean solve time: PPO {:.3} ms, greedy {:.3} ms, genetic {:.3} ms",
            1e3 * ppo,
            1e3 * greedy,
            1e3 * ga
        ),
    )
}

fn report(id: usize, name: &str, start: Instant, v: &Verdict) {
    println!(
        "criterion {id:>2} {} {name}: {} [{:.1} s]",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
}

fn check(id: usize, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    report(id, name, start, &v);
    v.pass
}

fn main() -> ExitCode {
    let ctx = Context::new();
    let mut all = check(1, "Lambert round-trip", lambert_round_trip);
    all &= check(2, "Kepler conservation", kepler_conservation);
    ctx.trained();
    let start = Instant::now();
    let (sandwich, ga) = sandwich_and_ga(&ctx);
    report(3, "optimality sandwich", start, &sandwich);
    all &= sandwich.pass;
    all &= check(4, "greedy suboptimality witness", greedy_witness);
    report(5, "GA quality", start, &ga);
    all &= ga.pass;
    all &= check(6, "PPO learning", || ppo_learning(&ctx));
    all &= check(7, "execution-time ordering", || execution_order(&ctx));
    all &= check(8, "statistics replay", statistics_replay);
    all &= check(9, "reward/TTR consistency", || reward_consistency(&ctx));
    all &= check(10, "PPO numerics", ppo_numerics);
    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
