use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{anyhow, Context};

use debris_core::harness::{
    improvement_pct, read_records, run_compare, summarize, write_records, write_stats, CompareConfig,
    Comparison, Method, Metric,
};
use debris_core::ppo::{train, write_train_log, Checkpoint, MlpPolicy};
use debris_core::scenarios::{make_scenarios, MissionClock, ScenarioSampler, SplitPart};
use debris_core::tle::{
    read_tle_file, split_dataset, synthetic_cloud, tle_to_elements, write_elements_csv, write_tle_file,
    CloudSpec, ElementRow,
};

use crate::config::{Overrides, RunConfig};
use crate::data::{read_split, write_split, ScenarioFile};
use crate::manifest::{manifest_path, Manifest};
use crate::{Classify, Command, Failure};

type Outcome = Result<(), Failure>;

pub fn run(command: Command, config: Option<&Path>, global: Overrides) -> Outcome {
    let load = |extra: Overrides| -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::load(config).usage()?;
        cfg.apply(&global);
        cfg.apply(&extra);
        cfg.validate().usage()?;
        Ok(cfg)
    };
    match command {
        Command::Synth(a) => {
            let cfg = load(Overrides::default())?;
            let spec = CloudSpec {
                count: a.count.unwrap_or(CloudSpec::default().count),
                ..CloudSpec::default()
            };
            if spec.count == 0 {
                return Err(Failure::Usage(anyhow!("--count must be positive")));
            }
            let records = synthetic_cloud(&spec, a.seed);
            write_tle_file(&a.out, &records)
                .with_context(|| format!("writing {}", a.out.display()))
                .data()?;
            println!("wrote {} element sets to {}", records.len(), a.out.display());
            Manifest::new("synth", &cfg)
                .seed("synth", a.seed)
                .output(&a.out)
                .write(&manifest_path(&a.out))
                .data()
        }
        Command::Ingest(a) => {
            let cfg = load(Overrides::default())?;
            let records = read_tle_file(&a.tle).data()?;
            let clock = MissionClock::from_records(&records).data()?;
            let mut rows = Vec::with_capacity(records.len());
            let mut suspect = 0;
            for rec in &records {
                let (elems, warn) = tle_to_elements(rec, cfg.leg.mu, clock.reference_unix)
                    .with_context(|| format!("NORAD {}", rec.norad_id))
                    .data()?;
                if let Some(w) = warn {
                    suspect += 1;
                    log::warn!("NORAD {}: perigee radius {:.1} km", rec.norad_id, w.perigee_radius);
                }
                rows.push(ElementRow::new(rec, &elems));
            }
            let out = File::create(&a.out)
                .with_context(|| format!("creating {}", a.out.display()))
                .data()?;
            write_elements_csv(BufWriter::new(out), &rows).data()?;
            println!("{} element sets, {suspect} with suspect perigee", rows.len());
            Manifest::new("ingest", &cfg)
                .input(&a.tle)
                .output(&a.out)
                .write(&manifest_path(&a.out))
                .data()
        }
        Command::Split(a) => {
            let cfg = load(Overrides::default())?;
            let records = read_tle_file(&a.tle).data()?;
            let split = split_dataset(&records, a.seed).data()?;
            write_split(&a.out_dir, &split).data()?;
            let (train, test, eval) = split.sizes();
            println!("train {train}, test {test}, eval {eval}");
            Manifest::new("split", &cfg)
                .seed("split", a.seed)
                .input(&a.tle)
                .output(&a.out_dir)
                .write(&manifest_path(&a.out_dir))
                .data()
        }
        Command::Scenarios(a) => {
            let cfg = load(Overrides::default())?;
            let part = parse_part(&a.part)?;
            let split = read_split(&a.data).data()?;
            let scenarios =
                make_scenarios(&split, part, cfg.n_debris, a.count, a.seed, &cfg.parking, cfg.leg.mu).usage()?;
            let file = ScenarioFile {
                part,
                seed: a.seed,
                n_debris: cfg.n_debris,
                clock: MissionClock::from_records(split.all()).data()?,
                parking: cfg.parking,
                scenarios,
            };
            file.write(&a.out).data()?;
            println!("wrote {} scenarios of {} debris to {}", a.count, cfg.n_debris, a.out.display());
            Manifest::new("scenarios", &cfg)
                .seed("scenarios", a.seed)
                .input(&a.data)
                .output(&a.out)
                .write(&manifest_path(&a.out))
                .data()
        }
        Command::Solve(a) => {
            let cfg = load(Overrides::default())?;
            let method: Method = a.method.parse().usage()?;
            let file = ScenarioFile::read(&a.scenarios).data()?;
            let policy = load_policy(&[method], a.checkpoint.as_deref(), &cfg)?;
            let cmp = compare(&file, &[method], &cfg, policy.as_ref(), 1)?;
            for r in &cmp.records {
                println!(
                    "scenario {}: order {}, total TTR {:.1} s, {:.3} ms",
                    r.scenario_id,
                    debris_core::harness::format_order(&r.order),
                    r.total_ttr,
                    1e3 * r.execution_time
                );
            }
            let mut manifest = Manifest::new("solve", &cfg).input(&a.scenarios);
            if let Some(path) = &a.records {
                write_records_file(&cmp, path)?;
                manifest = manifest.output(path);
                manifest.write(&manifest_path(path)).data()?;
            }
            check_feasible(&cmp, file.scenarios.len())
        }
        Command::Train(a) => {
            let cfg = load(Overrides {
                episodes: a.episodes,
                ppo_seed: a.seed,
                ..Overrides::default()
            })?;
            let split = read_split(&a.data).data()?;
            let clock = MissionClock::from_records(split.all()).data()?;
            let mut sampler =
                ScenarioSampler::new(&split.train, clock, cfg.n_debris, &cfg.parking, cfg.leg.mu).usage()?;
            log::info!("training on {} debris for {} episodes", split.train.len(), cfg.ppo.total_episodes);
            let start = std::time::Instant::now();
            let out = train(&mut sampler, &cfg.ppo, &cfg.leg).data()?;
            let checkpoint = Checkpoint::new(out.policy, cfg.ppo.clone(), cfg.leg);
            checkpoint.save(&a.out).data()?;
            let mut manifest = Manifest::new("train", &cfg)
                .seed("ppo", cfg.ppo.seed)
                .input(&a.data)
                .output(&a.out);
            if let Some(log_path) = &a.log {
                let f = File::create(log_path)
                    .with_context(|| format!("creating {}", log_path.display()))
                    .data()?;
                write_train_log(&out.log, BufWriter::new(f)).data()?;
                manifest = manifest.output(log_path);
            }
            let tail = &out.log[out.log.len().saturating_sub(100)..];
            let recent = tail.iter().map(|r| r.ttr_seconds).sum::<f64>() / tail.len().max(1) as f64;
            println!(
                "trained {} episodes ({} updates) in {:.1} s; mean TTR of the last {} episodes {:.1} s",
                out.log.len(),
                out.updates.len(),
                start.elapsed().as_secs_f64(),
                tail.len(),
                recent
            );
            manifest.write(&manifest_path(&a.out)).data()
        }
        Command::Compare(a) => {
            let cfg = load(Overrides {
                ga_seed: a.seed,
                ..Overrides::default()
            })?;
            let methods = a
                .methods
                .iter()
                .map(|m| m.parse::<Method>())
                .collect::<Result<Vec<_>, _>>()
                .usage()?;
            let file = ScenarioFile::read(&a.scenarios).data()?;
            let policy = load_policy(&methods, a.checkpoint.as_deref(), &cfg)?;
            let cmp = compare(&file, &methods, &cfg, policy.as_ref(), a.repeats)?;
            std::fs::create_dir_all(&a.out_dir)
                .with_context(|| format!("creating {}", a.out_dir.display()))
                .data()?;
            let records = a.out_dir.join("records.csv");
            let stats = a.out_dir.join("stats.csv");
            write_records_file(&cmp, &records)?;
            let mut summary = cmp.ttr_stats();
            summary.extend(cmp.time_stats());
            let f = File::create(&stats)
                .with_context(|| format!("creating {}", stats.display()))
                .data()?;
            write_stats(&summary, BufWriter::new(f)).data()?;
            for s in &summary {
                println!("{:<24} n={:<4} avg {:.6}", s.group, s.count, s.average);
            }
            let mut manifest = Manifest::new("compare", &cfg)
                .seed("ga", cfg.ga.seed)
                .input(&a.scenarios)
                .output(&records)
                .output(&stats);
            if let Some(c) = &a.checkpoint {
                manifest = manifest.input(c);
            }
            manifest.write(&manifest_path(&a.out_dir)).data()?;
            check_feasible(&cmp, file.scenarios.len())
        }
        Command::Stats(a) => {
            let f = File::open(&a.records)
                .with_context(|| format!("opening {}", a.records.display()))
                .data()?;
            let records = read_records(f).data()?;
            let mut summary = summarize(&records, Metric::Ttr);
            summary.extend(summarize(&records, Metric::ExecutionTime));
            match &a.out {
                Some(path) => {
                    let f = File::create(path)
                        .with_context(|| format!("creating {}", path.display()))
                        .data()?;
                    write_stats(&summary, BufWriter::new(f)).data()?;
                }
                None => write_stats(&summary, std::io::stdout().lock()).data()?,
            }
            if let Some(base) = &a.baseline {
                let base: Method = base.parse().usage()?;
                let cand: Method = a.candidate.parse().usage()?;
                let mean = |m: Method| {
                    let v: Vec<f64> = records.iter().filter(|r| r.method == m).map(|r| r.total_ttr).collect();
                    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
                };
                let (Some(b), Some(c)) = (mean(base), mean(cand)) else {
                    return Err(Failure::Data(anyhow!("records lack {base} or {cand} rows")));
                };
                let pct = improvement_pct(b, c).data()?;
                println!("{} improves on {} by {pct:.2}%", cand.label(), base.label());
            }
            Ok(())
        }
    }
}

fn parse_part(s: &str) -> Result<SplitPart, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "train" => Ok(SplitPart::Train),
        "test" => Ok(SplitPart::Test),
        "eval" => Ok(SplitPart::Eval),
        other => Err(Failure::Usage(anyhow!("unknown split part `{other}` (train, test or eval)"))),
    }
}

fn load_policy(methods: &[Method], path: Option<&Path>, cfg: &RunConfig) -> Result<Option<MlpPolicy>, Failure> {
    if !methods.contains(&Method::Ppo) {
        return Ok(None);
    }
    let Some(path) = path else {
        return Err(Failure::Usage(anyhow!(
            "method ppo needs a trained policy: pass --checkpoint (create one with `debris train`)"
        )));
    };
    let ckpt = Checkpoint::load(path)
        .with_context(|| format!("loading checkpoint {}", path.display()))
        .usage()?;
    if ckpt.leg != cfg.leg {
        log::warn!("checkpoint was trained with a different leg configuration; evaluating with the current one");
    }
    Ok(Some(ckpt.policy))
}

fn compare(
    file: &ScenarioFile,
    methods: &[Method],
    cfg: &RunConfig,
    policy: Option<&MlpPolicy>,
    repeats: usize,
) -> Result<Comparison, Failure> {
    let cmp = CompareConfig {
        leg: cfg.leg,
        ga: cfg.ga,
        policy,
        seed: cfg.ga.seed,
        timing_repeats: repeats,
    };
    run_compare(&file.scenarios, methods, &cmp).usage()
}

fn write_records_file(cmp: &Comparison, path: &Path) -> Outcome {
    let f = File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .data()?;
    write_records(&cmp.records, BufWriter::new(f)).data()?;
    for inf in &cmp.infeasible {
        log::warn!("scenario {} ({}) infeasible: {}", inf.scenario_id, inf.method, inf.reason);
    }
    Ok(())
}

fn check_feasible(cmp: &Comparison, n_scenarios: usize) -> Outcome {
    let frac = cmp.infeasible_fraction(n_scenarios);
    if frac > 0.5 {
        return Err(Failure::Infeasible(format!(
            "{:.0}% of scenarios had an infeasible method run",
            100.0 * frac
        )));
    }
    if !cmp.infeasible.is_empty() {
        eprintln!("warning: {} infeasible runs", cmp.infeasible.len());
    }
    Ok(())
}
