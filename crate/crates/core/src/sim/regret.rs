//! Regret comparison of the flat bandits and the tree learners on a small
//! Bernoulli instance.

use crate::bandit::{update, BanditState, Policy, RegretLedger};
use crate::error::{Error, Result};
use crate::mcts::{Backprop, LayeredTask, TreeLearner};
use crate::rng::{stream, streams, SimRng};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Runs `policy` on independent Bernoulli arms for `rounds` rounds.
pub fn flat_bandit_regret(means: &[f64], policy: Policy, rounds: u64, rng: &mut SimRng) -> Result<RegretLedger> {
    if means.is_empty() {
        return Err(Error::argument("need at least one arm"));
    }
    let mut state = BanditState::new(means.len(), 1);
    let candidates: Vec<usize> = (0..means.len()).collect();
    let mut ledger = RegretLedger::new(means.iter().copied().fold(0.0, f64::max));
    for _ in 0..rounds {
        let arm = policy.select(&state, &candidates, rng)?;
        let reward = rng.random::<f64>() < means[arm];
        update(&mut state, arm, u8::from(reward))?;
        ledger.record_regret(means[arm]);
    }
    Ok(ledger)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegretStudyConfig {
    pub rounds: u64,
    pub epsilon: f64,
    pub eta_c: f64,
    /// Second period of the tree task scales every mean by this factor.
    pub second_period_scale: f64,
}

impl Default for RegretStudyConfig {
    fn default() -> Self {
        Self { rounds: 10_000, epsilon: 0.5, eta_c: 1.0, second_period_scale: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Learner {
    Eps,
    Ucb,
    Uct,
    Mcts,
}

impl Learner {
    pub const ALL: [Learner; 4] = [Learner::Eps, Learner::Ucb, Learner::Uct, Learner::Mcts];

    pub fn as_str(self) -> &'static str {
        match self {
            Learner::Eps => "eps",
            Learner::Ucb => "ucb",
            Learner::Uct => "uct",
            Learner::Mcts => "mcts",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eps" | "eps-greedy" => Ok(Learner::Eps),
            "ucb" => Ok(Learner::Ucb),
            "uct" => Ok(Learner::Uct),
            "mcts" => Ok(Learner::Mcts),
            other => Err(Error::argument(format!("unknown learner '{other}'"))),
        }
    }
}

/// Regret of one learner on one seed.
pub fn learner_regret(means: &[f64], learner: Learner, config: &RegretStudyConfig, seed: u64) -> Result<RegretLedger> {
    let mut rng = stream(seed, streams::REGRET);
    match learner {
        Learner::Eps => {
            flat_bandit_regret(means, Policy::EpsGreedy { epsilon: config.epsilon }, config.rounds, &mut rng)
        }
        Learner::Ucb => flat_bandit_regret(means, Policy::Ucb { eta_c: config.eta_c }, config.rounds, &mut rng),
        Learner::Uct | Learner::Mcts => {
            let scaled = means.iter().map(|m| m * config.second_period_scale).collect();
            let task = LayeredTask::new(vec![means.to_vec(), scaled])?;
            let backprop = if learner == Learner::Mcts { Backprop::Full } else { Backprop::LeafOnly };
            Ok(TreeLearner::new(task, config.eta_c, backprop).run(config.rounds, &mut rng))
        }
    }
}

/// Cumulative regret averaged over seeds, one value per round from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    pub learner: Learner,
    pub mean: Vec<f64>,
}

impl RegretCurve {
    pub fn last(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    /// Regret slope over the rounds `[from, to)` given as fractions of the run.
    pub fn slope(&self, from: f64, to: f64) -> f64 {
        let rounds = self.mean.len() - 1;
        let a = (rounds as f64 * from).round() as usize;
        let b = (rounds as f64 * to).round() as usize;
        (self.mean[b] - self.mean[a]) / (b - a).max(1) as f64
    }
}

pub fn regret_study(
    means: &[f64],
    learners: &[Learner],
    config: &RegretStudyConfig,
    seeds: &[u64],
) -> Result<Vec<RegretCurve>> {
    if seeds.is_empty() {
        return Err(Error::argument("regret study needs at least one seed"));
    }
    learners
        .iter()
        .map(|&learner| {
            let runs = seeds
                .par_iter()
                .map(|&seed| learner_regret(means, learner, config, seed))
                .collect::<Result<Vec<_>>>()?;
            let mut mean = vec![0.0; config.rounds as usize + 1];
            for run in &runs {
                for &(round, value) in &run.curve {
                    mean[round as usize] += value / runs.len() as f64;
                }
            }
            Ok(RegretCurve { learner, mean })
        })
        .collect()
}

/// Rows of `round,<learner>...` with every `every`-th round.
pub fn write_regret_csv<W: std::io::Write>(curves: &[RegretCurve], every: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["round".to_string()];
    header.extend(curves.iter().map(|c| c.learner.as_str().to_string()));
    w.write_record(&header).map_err(csv_err)?;
    let len = curves.first().map_or(0, |c| c.mean.len());
    for round in (0..len).step_by(every.max(1)) {
        let mut row = vec![round.to_string()];
        row.extend(curves.iter().map(|c| c.mean[round].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_optimal_arm_has_no_regret() {
        let mut rng = stream(1, streams::REGRET);
        let ledger = flat_bandit_regret(&[0.7], Policy::Ucb { eta_c: 1.0 }, 200, &mut rng).unwrap();
        assert_eq!(ledger.cumulative, 0.0);
        assert_eq!(ledger.rounds(), 200);
    }

    #[test]
    fn averaged_curve_starts_at_zero_and_rises() {
        let cfg = RegretStudyConfig { rounds: 300, ..Default::default() };
        let curves = regret_study(&[0.9, 0.1], &Learner::ALL, &cfg, &[1, 2]).unwrap();
        for c in &curves {
            assert_eq!(c.mean.len(), 301);
            assert_eq!(c.mean[0], 0.0);
            assert!(c.mean.windows(2).all(|w| w[1] >= w[0]));
        }
        let mut buf = Vec::new();
        write_regret_csv(&curves, 100, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "round,eps,ucb,uct,mcts");
        assert_eq!(text.lines().count(), 5);
    }
}
