use crate::error::{CliError, CliResult};
use crate::output::{out_dir, seed_batch, write_atomic, write_csv, write_json, Provenance};
use crate::setup::{label, load_config, parse_planner, parse_seeds, read_text, Overrides, RunManifest};
use crate::{CompareArgs, ConfigArgs, EstimateArgs, GenArgs, PolicyArg, SimulateArgs};
use evtol_offload::mcts::{Estimates, PlanContext, PlanState};
use evtol_offload::scenario::{generate_world, World};
use evtol_offload::sim::experiment::{run_experiment, run_seed_on, ExperimentConfig};
use evtol_offload::sim::knowledge::{prelearn, PolicyKind, PrelearnConfig};
use evtol_offload::sim::regret::{regret_study, write_regret_csv, Learner, RegretStudyConfig};
use evtol_offload::sim::{aggregate, EpisodeLog, Metrics};
use rayon::prelude::*;
use serde_json::json;
use std::path::Path;

fn overrides(args: &ConfigArgs) -> CliResult<Overrides> {
    Overrides::parse(args.set.iter().map(String::as_str))
}

pub fn gen(args: GenArgs) -> CliResult<()> {
    let cfg = load_config(args.config.config.as_deref(), &overrides(&args.config)?)?;
    let world = generate_world(&cfg.scenario, args.seed)?;
    let path = args.out.unwrap_or_else(|| out_dir(None).join(format!("world-{}.json", args.seed)));
    let provenance = Provenance::new("gen", &cfg.scenario, &[args.seed]);
    write_json(&path, &json!({ "provenance": provenance.json(), "world": world }))?;
    println!("{}", path.display());
    Ok(())
}

/// A world file from `gen`, or a bare world object.
fn read_world(path: &Path) -> CliResult<World> {
    let bad = |e: serde_json::Error| CliError::Config(format!("{}: {e}", path.display()));
    let mut value: serde_json::Value = serde_json::from_str(&read_text(path)?).map_err(bad)?;
    if let Some(inner) = value.get_mut("world") {
        value = inner.take();
    }
    let world: World = serde_json::from_value(value).map_err(bad)?;
    world.validate()?;
    Ok(world)
}

pub fn estimate(args: EstimateArgs) -> CliResult<()> {
    if args.episodes == 0 {
        return Err(CliError::Argument("--episodes must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&args.epsilon) || args.eta_c.is_nan() || args.eta_c < 0.0 {
        return Err(CliError::Argument("--epsilon must lie in [0, 1] and --eta-c be non-negative".into()));
    }
    let world = read_world(&args.world)?;
    let config = PrelearnConfig {
        policy: match args.policy {
            PolicyArg::Ucb => PolicyKind::Ucb,
            PolicyArg::Eps => PolicyKind::Eps,
        },
        eta_c: args.eta_c,
        epsilon: args.epsilon,
        rounds: args.episodes,
        ..PrelearnConfig::default()
    };
    let seed = args.seed.unwrap_or(world.seed);
    let knowledge = prelearn(&world, &config, args.required_work, seed)?;
    let provenance = Provenance::new(
        "estimate",
        &json!({ "world": world, "prelearn": config, "required_work": args.required_work }),
        &[seed],
    );
    let dir = out_dir(args.out);
    write_json(
        &dir.join("estimates.json"),
        &json!({
            "provenance": provenance.json(),
            "prelearn": config,
            "estimates": knowledge.estimates,
            "regret": { "optimal_mean": knowledge.regret.optimal_mean, "cumulative": knowledge.regret.cumulative },
        }),
    )?;
    let rows: Vec<Vec<String>> =
        knowledge.regret.curve.iter().map(|&(round, regret)| vec![round.to_string(), regret.to_string()]).collect();
    write_csv(&dir.join("regret.csv"), &provenance, &["round", "cumulative_regret"], &rows)?;
    println!("{}", dir.display());
    Ok(())
}

/// Fails when no mission could even fly straight from start to goal.
fn check_setup(cfg: &ExperimentConfig, world: &World) -> CliResult<()> {
    let task = cfg.task_spec();
    let estimates = Estimates::exact(world);
    let ctx = PlanContext { world, power: &cfg.power, task: &task, estimates: &estimates };
    if PlanState::initial(world, &cfg.power, &task).goal_is_reachable(&ctx) {
        Ok(())
    } else {
        Err(CliError::Infeasible(format!(
            "the goal is out of reach within the deadline ({} s) and battery ({} J)",
            task.deadline, cfg.power.battery
        )))
    }
}

/// `(metric, value, ci)` rows, with the energy curve over access counts.
fn metric_rows(m: &Metrics) -> Vec<(String, f64, f64)> {
    let mut rows: Vec<_> = m.rows().into_iter().map(|(k, v, ci)| (k.to_string(), v, ci)).collect();
    rows.extend(m.energy_vs_accesses.iter().map(|p| (format!("energy_at_{}_accesses", p.accesses), p.energy, 0.0)));
    rows
}

fn simulate_manifest(args: &SimulateArgs) -> CliResult<RunManifest> {
    let flags = overrides(&args.config)?;
    let Some(path) = &args.manifest else {
        let planner =
            args.planner.as_deref().ok_or_else(|| CliError::Argument("--planner or --manifest is required".into()))?;
        return Ok(RunManifest {
            name: label(args.config.config.as_deref()),
            config_path: args.config.config.clone(),
            planner: parse_planner(planner)?,
            seeds: parse_seeds(args.seeds.as_deref().unwrap_or("0"))?,
            out: None,
            overrides: flags,
        });
    };
    let mut m = RunManifest::load(path)?;
    let conflict = |key: &str, first: String, second: String| CliError::Conflict { key: key.into(), first, second };
    if let Some(p) = &args.planner {
        let flag = parse_planner(p)?;
        if flag != m.planner {
            return Err(conflict("planner", m.planner.to_string(), flag.to_string()));
        }
    }
    if let Some(s) = &args.seeds {
        let flag = parse_seeds(s)?;
        if flag != m.seeds {
            return Err(conflict("seeds", seed_batch(&m.seeds), seed_batch(&flag)));
        }
    }
    if let Some(c) = &args.config.config {
        if m.config_path.as_ref() != Some(c) {
            let shown = m.config_path.as_ref().map_or("none".into(), |p| p.display().to_string());
            return Err(conflict("config", shown, c.display().to_string()));
        }
    }
    m.overrides = m.overrides.merge(&flags)?;
    Ok(m)
}

fn write_track(path: &Path, provenance: &Provenance, log: &EpisodeLog) -> CliResult<()> {
    let rows: Vec<Vec<String>> = log
        .trajectory
        .iter()
        .map(|s| {
            let (p, v) = (s.position, s.velocity);
            [s.t, p.x, p.y, p.z, v.x, v.y, v.z].iter().map(f64::to_string).collect()
        })
        .collect();
    write_csv(path, provenance, &["t", "x", "y", "z", "vx", "vy", "vz"], &rows)
}

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    let manifest = simulate_manifest(&args)?;
    let mut cfg = manifest.config()?;
    cfg.episode.record_track = args.tracks;
    let fixed = args.world.as_deref().map(read_world).transpose()?;
    let first = match &fixed {
        Some(w) => w.clone(),
        None => generate_world(&cfg.scenario, manifest.seeds[0])?,
    };
    check_setup(&cfg, &first)?;

    let dir = out_dir(args.out.clone().or(manifest.out.clone()));
    let provenance = Provenance::new("simulate", &cfg, &manifest.seeds);
    let header = provenance.json();
    let planner = manifest.planner;
    let logs = manifest
        .seeds
        .par_iter()
        .map(|&seed| {
            let world = match &fixed {
                Some(w) => w.clone(),
                None => generate_world(&cfg.scenario, seed)?,
            };
            let log = run_seed_on(&cfg, world, seed, &[planner])?.logs.remove(0);
            let stem = format!("{planner}-seed{seed}");
            write_atomic(&dir.join("logs").join(format!("{stem}.jsonl")), |w| log.write_jsonl(w, &header))?;
            if args.tracks {
                write_track(&dir.join("tracks").join(format!("{stem}.csv")), &provenance, &log)?;
            }
            Ok(log)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let metrics = aggregate(&logs, cfg.task_spec().lambda)?;
    let batch = seed_batch(&manifest.seeds);
    let rows: Vec<Vec<String>> = metric_rows(&metrics)
        .into_iter()
        .map(|(metric, value, ci)| {
            vec![manifest.name.clone(), planner.to_string(), batch.clone(), metric, value.to_string(), ci.to_string()]
        })
        .collect();
    write_csv(
        &dir.join("metrics.csv"),
        &provenance,
        &["scenario", "planner", "seeds", "metric", "value", "ci"],
        &rows,
    )?;
    println!("{} logs and metrics in {}", logs.len(), dir.display());
    Ok(())
}

fn compare_regret(args: &CompareArgs) -> CliResult<()> {
    if !args.manifests.is_empty() {
        return Err(CliError::Argument("--regret takes no manifests".into()));
    }
    let learners = if args.planners.is_empty() {
        Learner::ALL.to_vec()
    } else {
        args.planners.iter().map(|p| Learner::parse(p)).collect::<Result<Vec<_>, _>>()?
    };
    let defaults = RegretStudyConfig::default();
    let study = RegretStudyConfig {
        rounds: args.rounds,
        epsilon: args.epsilon.unwrap_or(defaults.epsilon),
        eta_c: args.eta_c.unwrap_or(defaults.eta_c),
        ..defaults
    };
    if study.rounds == 0 || args.means.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(CliError::Argument("--rounds must be positive and --means lie in [0, 1]".into()));
    }
    let seeds = parse_seeds(args.seeds.as_deref().unwrap_or("0..49"))?;
    let curves = regret_study(&args.means, &learners, &study, &seeds)?;
    let provenance =
        Provenance::new("compare", &json!({ "means": args.means, "study": study, "learners": learners }), &seeds);
    let path = out_dir(args.out.clone()).join("regret.csv");
    write_atomic(&path, |w| {
        w.write_all(provenance.csv_header().as_bytes())?;
        write_regret_csv(&curves, args.every, w).map_err(std::io::Error::other)
    })?;
    println!("{}", path.display());
    Ok(())
}

pub fn compare(args: CompareArgs) -> CliResult<()> {
    if args.regret {
        return compare_regret(&args);
    }
    let mut manifests = args.manifests.iter().map(|p| RunManifest::load(p)).collect::<CliResult<Vec<_>>>()?;
    if !args.planners.is_empty() {
        let seeds = parse_seeds(args.seeds.as_deref().unwrap_or("0..99"))?;
        let flags = overrides(&args.config)?;
        for p in &args.planners {
            manifests.push(RunManifest {
                name: label(args.config.config.as_deref()),
                config_path: args.config.config.clone(),
                planner: parse_planner(p)?,
                seeds: seeds.clone(),
                out: None,
                overrides: flags.clone(),
            });
        }
    }
    if manifests.len() < 2 {
        return Err(CliError::Argument("compare needs at least two manifests or planners".into()));
    }
    let seeds = manifests[0].seeds.clone();
    if let Some(m) = manifests.iter().find(|m| m.seeds != seeds) {
        return Err(CliError::Config(format!(
            "manifests disagree on seeds: {} vs {} ({})",
            seed_batch(&seeds),
            seed_batch(&m.seeds),
            m.name
        )));
    }

    let mut rows = Vec::new();
    let mut configs = Vec::new();
    for m in &manifests {
        let mut cfg = m.config()?;
        cfg.episode.record_track = false;
        check_setup(&cfg, &generate_world(&cfg.scenario, seeds[0])?)?;
        let runs = run_experiment(&cfg, &seeds, &[m.planner])?;
        let logs: Vec<_> = runs.into_iter().map(|mut r| r.logs.remove(0)).collect();
        let metrics = aggregate(&logs, cfg.task_spec().lambda)?;
        for (metric, value, ci) in metric_rows(&metrics) {
            rows.push(vec![m.name.clone(), m.planner.to_string(), metric, value.to_string(), ci.to_string()]);
        }
        configs.push(json!({ "scenario": m.name, "planner": m.planner, "config": cfg }));
    }
    let provenance = Provenance::new("compare", &configs, &seeds);
    let path = out_dir(args.out.clone()).join("compare.csv");
    write_csv(&path, &provenance, &["scenario", "planner", "metric", "value", "ci"], &rows)?;
    println!("{}", path.display());
    Ok(())
}
