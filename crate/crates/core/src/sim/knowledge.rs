//! Pre-flight knowledge: spectrum estimates from the bandit stage and CPU
//! time means learned from the connections that stage managed to make.

use crate::bandit::{pretrain_with, BanditState, Policy, RegretLedger};
use crate::error::Result;
use crate::mcts::Estimates;
use crate::rng::{stream, streams};
use crate::scenario::{sample_cpu_cycles, World};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrelearnConfig {
    pub policy: PolicyKind,
    pub eta_c: f64,
    pub epsilon: f64,
    pub rounds: u64,
    /// CPU mean assumed for arms that were never connected, s. Unset means
    /// the task's required work (optimistic).
    pub cpu_prior: Option<f64>,
    /// Spectrum estimate for arms that were never pulled.
    pub unknown_spectrum: f64,
}

impl Default for PrelearnConfig {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Ucb,
            eta_c: 1.0,
            epsilon: 0.5,
            rounds: 10_000,
            cpu_prior: None,
            unknown_spectrum: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Ucb,
    #[serde(alias = "eps-greedy")]
    Eps,
}

impl PrelearnConfig {
    pub fn policy(&self) -> Policy {
        match self.policy {
            PolicyKind::Ucb => Policy::Ucb { eta_c: self.eta_c },
            PolicyKind::Eps => Policy::EpsGreedy { epsilon: self.epsilon },
        }
    }
}

/// Running CPU-time means per (station, period).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpuBook {
    pub num_periods: usize,
    pub sums: Vec<f64>,
    pub counts: Vec<u64>,
}

impl CpuBook {
    pub fn new(num_stations: usize, num_periods: usize) -> Self {
        Self { num_periods, sums: vec![0.0; num_stations * num_periods], counts: vec![0; num_stations * num_periods] }
    }

    pub fn record(&mut self, bs: usize, period: usize, cycles: f64) {
        let i = bs * self.num_periods + period;
        self.sums[i] += cycles;
        self.counts[i] += 1;
    }

    pub fn means(&self, prior: f64) -> Vec<f64> {
        self.sums.iter().zip(&self.counts).map(|(&s, &n)| if n > 0 { s / n as f64 } else { prior }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knowledge {
    pub bandit: BanditState,
    pub regret: RegretLedger,
    pub cpu: CpuBook,
    pub estimates: Estimates,
}

/// Runs the bandit stage on `world`; every granted access also reveals one
/// draw of the station's CPU time.
pub fn prelearn(world: &World, config: &PrelearnConfig, required_work: f64, seed: u64) -> Result<Knowledge> {
    let mut rng = stream(seed, streams::PRELEARN);
    let mut cpu = CpuBook::new(world.num_stations(), world.num_periods());
    let (bandit, regret) =
        pretrain_with(world, config.policy(), config.rounds, &mut rng, |bs, period, success, rng| {
            if success {
                cpu.record(bs, period, sample_cpu_cycles(world, bs, period, rng).expect("arm in range"));
            }
        })?;
    let prior = config.cpu_prior.unwrap_or(required_work);
    let estimates = Estimates::from_bandit(&bandit, cpu.means(prior), config.unknown_spectrum)?;
    Ok(Knowledge { bandit, regret, cpu, estimates })
}
