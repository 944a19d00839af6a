//! Experiment configuration and the per-seed driver: generate the world,
//! pre-learn, then fly every requested planner with the same knowledge.

use super::knowledge::{prelearn, Knowledge, PrelearnConfig};
use super::{run_episode, EpisodeLog, EpisodeOptions, TaskSpec};
use crate::baselines::{EpsGreedyPlanner, TspPlanner, UcbPlanner};
use crate::energy::PowerModel;
use crate::error::{Error, Result};
use crate::mcts::{MctsPlanner, Planner, PlannerConfig};
use crate::scenario::{generate_world, ResourceMix, ScenarioConfig, World};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub required_work: f64,
    pub deadline: f64,
    pub t_com: f64,
    /// Joules; twice the battery when unset, so any completion outweighs any
    /// energy the mission can spend.
    pub lambda: Option<f64>,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self { required_work: 1200.0, deadline: 3600.0, t_com: 0.0, lambda: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Exploration rate of the ε-greedy planner.
    pub epsilon: f64,
    /// Bonus scale of the flat UCB planner.
    pub ucb_eta_c: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { epsilon: 0.5, ucb_eta_c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub power: PowerModel,
    pub task: TaskConfig,
    pub planner: PlannerConfig,
    pub baselines: BaselineConfig,
    pub prelearn: PrelearnConfig,
    pub episode: EpisodeOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    Mcts,
    Tsp,
    EpsGreedy,
    Uct,
    Ucb,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] =
        [PlannerKind::Mcts, PlannerKind::Tsp, PlannerKind::EpsGreedy, PlannerKind::Uct, PlannerKind::Ucb];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Mcts => "mcts",
            PlannerKind::Tsp => "tsp",
            PlannerKind::EpsGreedy => "eps-greedy",
            PlannerKind::Uct => "uct",
            PlannerKind::Ucb => "ucb",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mcts" => Ok(PlannerKind::Mcts),
            "tsp" => Ok(PlannerKind::Tsp),
            "eps-greedy" | "eps" => Ok(PlannerKind::EpsGreedy),
            "uct" => Ok(PlannerKind::Uct),
            "ucb" => Ok(PlannerKind::Ucb),
            other => Err(Error::argument(format!("unknown planner '{other}'"))),
        }
    }
}

impl ExperimentConfig {
    /// One of the standard resource mixes (1..=4) at `num_stations`, with the
    /// required work scaled to the network size.
    pub fn standard(num_stations: usize, mix: u8) -> Result<Self> {
        let required_work = match num_stations {
            0..=5 => 1200.0,
            6..=7 => 1800.0,
            _ => 2400.0,
        };
        let mix = ResourceMix::standard(num_stations, mix)?;
        let scenario = ScenarioConfig { num_stations, ..ScenarioConfig::default() }.with_mix(mix, required_work);
        let task = TaskConfig { required_work, deadline: required_work + 1800.0, ..TaskConfig::default() };
        Ok(Self { scenario, task, ..Self::default() })
    }

    pub fn task_spec(&self) -> TaskSpec {
        TaskSpec {
            required_work: self.task.required_work,
            deadline: self.task.deadline,
            t_com: self.task.t_com,
            lambda: self.task.lambda.unwrap_or(2.0 * self.power.battery),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.power.validate()?;
        self.task_spec().validate()?;
        self.planner.validate()?;
        if !(0.0..=1.0).contains(&self.baselines.epsilon) {
            return Err(Error::config("baselines.epsilon must lie in [0, 1]"));
        }
        if self.prelearn.rounds == 0 {
            return Err(Error::config("prelearn.rounds must be at least 1"));
        }
        Ok(())
    }

    pub fn make_planner(&self, kind: PlannerKind) -> Box<dyn Planner + Send> {
        let weights = self.planner.weights();
        match kind {
            PlannerKind::Mcts => Box::new(MctsPlanner::new(self.planner)),
            PlannerKind::Uct => Box::new(MctsPlanner::without_backprop(self.planner)),
            PlannerKind::Tsp => Box::new(TspPlanner::new()),
            PlannerKind::EpsGreedy => Box::new(EpsGreedyPlanner { epsilon: self.baselines.epsilon, weights }),
            PlannerKind::Ucb => Box::new(UcbPlanner { eta_c: self.baselines.ucb_eta_c, weights }),
        }
    }
}

/// Everything produced for one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub world: World,
    pub knowledge: Knowledge,
    /// One log per requested planner, in request order.
    pub logs: Vec<EpisodeLog>,
}

pub fn run_seed(config: &ExperimentConfig, seed: u64, planners: &[PlannerKind]) -> Result<SeedRun> {
    let world = generate_world(&config.scenario, seed)?;
    run_seed_on(config, world, seed, planners)
}

/// As [`run_seed`] on a given world.
pub fn run_seed_on(config: &ExperimentConfig, world: World, seed: u64, planners: &[PlannerKind]) -> Result<SeedRun> {
    let task = config.task_spec();
    let knowledge = prelearn(&world, &config.prelearn, task.required_work, seed)?;
    let logs = planners
        .iter()
        .map(|&kind| {
            let mut planner = config.make_planner(kind);
            run_episode(&world, planner.as_mut(), &task, &config.power, &knowledge.estimates, seed, &config.episode)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeedRun { seed, world, knowledge, logs })
}

/// Runs every seed in parallel; results come back in seed order.
pub fn run_experiment(config: &ExperimentConfig, seeds: &[u64], planners: &[PlannerKind]) -> Result<Vec<SeedRun>> {
    config.validate()?;
    seeds.par_iter().map(|&seed| run_seed(config, seed, planners)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planner_names_roundtrip() {
        for kind in PlannerKind::ALL {
            assert_eq!(kind.as_str().parse::<PlannerKind>().unwrap(), kind);
            assert_eq!(ExperimentConfig::default().make_planner(kind).name(), kind.as_str());
        }
        assert!("dqn".parse::<PlannerKind>().is_err());
    }

    #[test]
    fn config_parses_from_toml() {
        let text = r#"
            [scenario]
            num_stations = 7
            [power]
            battery = 1.5e6
            [power.flight]
            kind = "constant"
            watts = 700.0
            [task]
            required_work = 1800.0
            [planner]
            iterations = 50
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.scenario.num_stations, 7);
        assert_eq!(cfg.task_spec().lambda, 3.0e6);
        assert_eq!(cfg.planner.iterations, 50);
        cfg.validate().unwrap();
        assert!(toml::from_str::<ExperimentConfig>("[task]\nbogus = 1").is_err());
    }

    #[test]
    fn parallel_runs_are_deterministic() {
        let mut cfg = ExperimentConfig::standard(5, 1).unwrap();
        cfg.planner.iterations = 50;
        cfg.prelearn.rounds = 500;
        cfg.episode.record_track = false;
        let a = run_experiment(&cfg, &[1, 2, 3], &PlannerKind::ALL).unwrap();
        let b = run_experiment(&cfg, &[1, 2, 3], &PlannerKind::ALL).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.logs, y.logs);
        }
    }
}
