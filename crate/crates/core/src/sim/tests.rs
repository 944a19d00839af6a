use super::constraints::violations;
use super::experiment::{ExperimentConfig, PlannerKind};
use super::*;
use crate::energy::FlightPower;
use crate::scenario::{BaseStation, CpuFamily, CpuProfile, SpectrumProfile, TimeGrid};
use proptest::prelude::*;

fn station(id: usize, x: f64, y: f64, p: f64, cpu: f64) -> BaseStation {
    BaseStation {
        id,
        position: Point3::new(x, y, 0.0),
        spectrum: SpectrumProfile::gaussian(vec![p], vec![0.0]),
        cpu: CpuProfile { family: CpuFamily::TruncatedNormal, mean: vec![cpu], dispersion: vec![0.0] },
    }
}

fn world(stations: Vec<BaseStation>) -> World {
    let grid = TimeGrid::new(1, 1e6, 0.0).unwrap();
    World::from_stations(stations, grid, Point3::new(0.0, 500.0, 0.0), Point3::new(4000.0, 500.0, 0.0), 0.0).unwrap()
}

fn power() -> PowerModel {
    PowerModel {
        p_hover: 500.0,
        flight: FlightPower::Constant { watts: 600.0 },
        cruise_speed: 20.0,
        v_max: 20.0,
        a_max: 5.0,
        battery: 2e6,
    }
}

fn task(deadline: f64) -> TaskSpec {
    TaskSpec { required_work: 300.0, deadline, t_com: 2.0, lambda: 1e6 }
}

fn fly(world: &World, kind: PlannerKind, task: &TaskSpec, seed: u64) -> EpisodeLog {
    let cfg = ExperimentConfig {
        planner: crate::mcts::PlannerConfig { iterations: 200, ..Default::default() },
        ..Default::default()
    };
    let mut planner = cfg.make_planner(kind);
    let est = Estimates::exact(world);
    run_episode(world, planner.as_mut(), task, &power(), &est, seed, &EpisodeOptions::default()).unwrap()
}

#[test]
fn one_reliable_station_completes_in_one_access() {
    let w = world(vec![station(0, 2000.0, 500.0, 1.0, 400.0)]);
    for kind in PlannerKind::ALL {
        let log = fly(&w, kind, &task(5000.0), 1);
        assert!(log.completed, "{kind}");
        assert_eq!(log.accesses().count(), 1, "{kind}");
        assert_eq!(log.decisions[0].outcome, AccessOutcome::Granted);
        assert_eq!(log.termination, Termination::Completed);
        assert!(log.concluded);
        assert!(violations(&log, &w, &task(5000.0), &power()).is_empty());
        // Hover is offload plus the remaining work.
        assert!((log.decisions[0].hover_time - 302.0).abs() < 1e-9);
        assert_eq!(log.energy_at_completion, Some(log.energy_total()));
    }
}

#[test]
fn no_spectrum_anywhere_means_no_completion() {
    let w = world(vec![station(0, 1000.0, 500.0, 0.0, 400.0), station(1, 3000.0, 500.0, 0.0, 400.0)]);
    for kind in PlannerKind::ALL {
        let log = fly(&w, kind, &task(5000.0), 2);
        assert!(!log.completed);
        assert_eq!(compute_eta(&log).binary, 0.0);
        assert!(log.accesses().count() > 0);
        assert!(log.accesses().all(|d| d.outcome == AccessOutcome::Denied));
        assert_eq!(log.termination, Termination::Exhausted);
        assert!(log.concluded);
    }
}

#[test]
fn deadline_below_any_flight_fails_on_time() {
    let w = world(vec![station(0, 2000.0, 500.0, 1.0, 400.0)]);
    let tight = task(50.0);
    for kind in PlannerKind::ALL {
        let log = fly(&w, kind, &tight, 3);
        assert!(!log.completed);
        assert!(log.decisions.is_empty());
        assert_eq!(log.termination, Termination::Unreachable);
        assert_eq!(log.energy_total(), 0.0);
    }
}

#[test]
fn partial_work_carries_over_to_the_next_station() {
    let w = world(vec![station(0, 1000.0, 500.0, 1.0, 120.0), station(1, 2500.0, 500.0, 1.0, 500.0)]);
    let log = fly(&w, PlannerKind::Tsp, &task(5000.0), 4);
    assert_eq!(log.decisions[0].outcome, AccessOutcome::Partial);
    assert_eq!(log.decisions[0].cpu_obtained, 120.0);
    assert_eq!(log.decisions[1].cpu_obtained, 180.0);
    assert!(log.completed);
}

#[test]
fn tsp_keeps_flying_after_completion() {
    let w = world(vec![station(0, 1000.0, 500.0, 1.0, 400.0), station(1, 2500.0, 2000.0, 1.0, 400.0)]);
    let log = fly(&w, PlannerKind::Tsp, &task(5000.0), 5);
    assert_eq!(log.decisions.len(), 2);
    assert_eq!(log.decisions[1].outcome, AccessOutcome::PassThrough);
    assert_eq!(log.accesses().count(), 1);
    assert!(log.energy_at_completion.unwrap() < log.energy_total());
    let mcts = fly(&w, PlannerKind::Mcts, &task(5000.0), 5);
    assert_eq!(mcts.decisions.len(), 1);
}

#[test]
fn tour_flies_in_the_launch_period() {
    let mut st = station(0, 2000.0, 500.0, 1.0, 400.0);
    st.spectrum = SpectrumProfile::gaussian(vec![1.0, 0.0], vec![0.0, 0.0]);
    st.cpu.mean = vec![400.0; 2];
    st.cpu.dispersion = vec![0.0; 2];
    let grid = TimeGrid::new(2, 1e6, 0.0).unwrap();
    let mut w =
        World::from_stations(vec![st], grid, Point3::new(0.0, 500.0, 0.0), Point3::new(4000.0, 500.0, 0.0), 0.0)
            .unwrap();
    w.launch = 1e6;
    let tsp = fly(&w, PlannerKind::Tsp, &task(5000.0), 1);
    assert_eq!(tsp.decisions[0].period, 1);
    assert!(!tsp.completed);
    let mcts = fly(&w, PlannerKind::Mcts, &task(5000.0), 1);
    assert_eq!(mcts.decisions[0].period, 0);
    assert!(mcts.completed);
}

#[test]
fn episodes_are_deterministic_per_seed() {
    let cfg = ExperimentConfig::standard(5, 2).unwrap();
    let w = crate::scenario::generate_world(&cfg.scenario, 11).unwrap();
    let t = cfg.task_spec();
    for kind in PlannerKind::ALL {
        let a = fly(&w, kind, &t, 7);
        let b = fly(&w, kind, &t, 7);
        assert_eq!(a, b);
    }
}

#[test]
fn objective_examples() {
    let w = world(vec![station(0, 2000.0, 500.0, 1.0, 400.0)]);
    let mut log = fly(&w, PlannerKind::Tsp, &task(5000.0), 1);
    log.ledger = Default::default();
    assert_eq!(compute_objective(&log, 1e5), -1e5);
    log.ledger.record_leg(70_000.0, 50_000.0);
    assert_eq!(compute_objective(&log, 1e5), 20_000.0);
    log.completed = false;
    log.work_done = 150.0;
    assert_eq!(compute_objective(&log, 1e5), 120_000.0);
    let eta = compute_eta(&log);
    assert_eq!((eta.binary, eta.fraction), (0.0, 0.5));
}

#[test]
fn identical_runs_have_zero_width_intervals() {
    let w = world(vec![station(0, 2000.0, 500.0, 1.0, 400.0)]);
    let log = fly(&w, PlannerKind::Mcts, &task(5000.0), 1);
    let runs = vec![log; 100];
    let m = aggregate(&runs, 1e6).unwrap();
    assert_eq!(m.eta.ci95, 0.0);
    assert_eq!(m.energy_total.ci95, 0.0);
    assert_eq!(m.access_success_rate, 1.0);
    assert_eq!(m.energy_vs_accesses.len(), 1);
    assert!(aggregate(&[], 1e6).is_err());
}

#[test]
fn access_success_rate_is_pooled() {
    let w = world(vec![station(0, 1000.0, 500.0, 0.0, 400.0), station(1, 3000.0, 500.0, 1.0, 400.0)]);
    let miss = fly(&w, PlannerKind::Tsp, &task(5000.0), 1);
    assert_eq!((miss.accesses().count(), miss.successes().count()), (2, 1));
    let hit = fly(&world(vec![station(0, 2000.0, 500.0, 1.0, 400.0)]), PlannerKind::Tsp, &task(5000.0), 1);
    let m = aggregate(&[miss, hit], 1e6).unwrap();
    assert_eq!(m.access_success_rate, 2.0 / 3.0);
    assert_eq!(m.mean_cpu_per_access, 400.0);
}

#[test]
fn jsonl_has_header_decisions_trailer() {
    let w = world(vec![station(0, 1000.0, 500.0, 0.0, 400.0), station(1, 3000.0, 500.0, 1.0, 400.0)]);
    let log = fly(&w, PlannerKind::Tsp, &task(5000.0), 1);
    let mut buf = Vec::new();
    log.write_jsonl(&mut buf, &serde_json::json!({ "config_sha256": "x" })).unwrap();
    let lines: Vec<serde_json::Value> =
        String::from_utf8(buf).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0]["record"], "header");
    assert_eq!(lines[1]["outcome"], "denied");
    assert_eq!(lines[3]["record"], "trailer");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_missions_respect_every_constraint(
        seed in 0u64..10_000,
        n in 2usize..8,
        mix in 1u8..=4,
        planner in 0usize..5,
        slack in 200.0f64..3000.0,
        t_com in 0.0f64..20.0,
    ) {
        let mut cfg = ExperimentConfig::standard(n, mix).unwrap();
        cfg.task.deadline = cfg.task.required_work + slack;
        cfg.task.t_com = t_com;
        cfg.planner.iterations = 60;
        cfg.prelearn.rounds = 600;
        let run = experiment::run_seed(&cfg, seed, &[PlannerKind::ALL[planner]]).unwrap();
        let log = &run.logs[0];
        let v = violations(log, &run.world, &cfg.task_spec(), &cfg.power);
        prop_assert!(v.is_empty(), "{v:#?}");
    }

    #[test]
    fn deselecting_a_station_never_grows_the_feasible_set(seed in 0u64..1000, bs in 0usize..5) {
        let cfg = ExperimentConfig::standard(5, 1).unwrap();
        let w = crate::scenario::generate_world(&cfg.scenario, seed).unwrap();
        let t = cfg.task_spec();
        let est = Estimates::exact(&w);
        let ctx = PlanContext { world: &w, power: &cfg.power, task: &t, estimates: &est };
        let mut s = PlanState::initial(&w, &cfg.power, &t);
        s.enter_period(&ctx, 0);
        let before = s.feasible_stations(&ctx);
        handle_failure(&mut s, Failure::Station(bs));
        let after = s.feasible_stations(&ctx);
        prop_assert!(after.iter().all(|b| before.contains(b)));
        prop_assert!(!after.contains(&bs));
    }
}
