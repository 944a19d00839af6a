use evtol_offload::scenario::{generate_world, World};
use evtol_offload::sim::aggregate;
use evtol_offload::sim::constraints::violations;
use evtol_offload::sim::experiment::{run_experiment, ExperimentConfig, PlannerKind};

const PRESETS: [&str; 4] = [
    include_str!("../../../configs/abundant-7.toml"),
    include_str!("../../../configs/constrained-7.toml"),
    include_str!("../../../configs/constrained-7-poisson.toml"),
    include_str!("../../../configs/constrained-5.toml"),
];

fn quick(text: &str) -> ExperimentConfig {
    let mut cfg: ExperimentConfig = toml::from_str(text).unwrap();
    cfg.planner.iterations = 200;
    cfg.prelearn.rounds = 2000;
    cfg
}

#[test]
fn presets_parse_and_validate() {
    for text in PRESETS {
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(generate_world(&cfg.scenario, 0).unwrap().num_stations(), cfg.scenario.num_stations);
    }
}

#[test]
fn preset_runs_are_clean_and_repeatable() {
    for text in PRESETS {
        let cfg = quick(text);
        let a = run_experiment(&cfg, &[3, 4], &PlannerKind::ALL).unwrap();
        let b = run_experiment(&cfg, &[3, 4], &PlannerKind::ALL).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.logs, y.logs);
            for log in &x.logs {
                assert!(violations(log, &x.world, &cfg.task_spec(), &cfg.power).is_empty());
            }
        }
        let logs: Vec<_> = a.iter().map(|r| r.logs[0].clone()).collect();
        let m = aggregate(&logs, cfg.task_spec().lambda).unwrap();
        assert_eq!(m.runs, 2);
        assert!((0.0..=1.0).contains(&m.eta.mean));
    }
}

#[test]
fn world_survives_json() {
    let cfg: ExperimentConfig = toml::from_str(PRESETS[3]).unwrap();
    let world = generate_world(&cfg.scenario, 9).unwrap();
    assert_eq!(world.launch, 28800.0);
    let back: World = serde_json::from_str(&serde_json::to_string(&world).unwrap()).unwrap();
    assert_eq!(back, world);
}

#[test]
fn planners_share_the_access_draws() {
    // With a single station every planner makes the same first access, so
    // the outcome must agree.
    let mut cfg = quick(PRESETS[1]);
    cfg.scenario.num_stations = 1;
    cfg.scenario.spectrum.high_count = Some(1);
    cfg.scenario.cpu.rich_count = Some(1);
    let runs = run_experiment(&cfg, &(0..20).collect::<Vec<_>>(), &PlannerKind::ALL).unwrap();
    for run in runs {
        let first: Vec<_> =
            run.logs.iter().filter_map(|l| l.decisions.first()).map(|d| (d.period, d.outcome)).collect();
        for pair in first.windows(2) {
            if pair[0].0 == pair[1].0 {
                assert_eq!(pair[0].1, pair[1].1);
            }
        }
    }
}
