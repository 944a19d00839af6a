use super::log::EpisodeLog;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Task completion of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eta {
    /// 1 when all work was done, else 0.
    pub binary: f64,
    /// Share of the required work that was done.
    pub fraction: f64,
}

pub fn compute_eta(log: &EpisodeLog) -> Eta {
    let fraction = (log.work_done / log.required_work).clamp(0.0, 1.0);
    Eta { binary: if log.completed { 1.0 } else { 0.0 }, fraction }
}

/// Hover energy plus flight energy minus `lambda` times completion.
pub fn compute_objective(log: &EpisodeLog, lambda: f64) -> f64 {
    log.ledger.hover_energy + log.ledger.flight_energy - lambda * compute_eta(log).binary
}

/// Sample mean with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, ci95: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, ci95: 0.0, n };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, ci95: 1.96 * (var / n as f64).sqrt(), n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPoint {
    /// Number of stations the mission tried to access.
    pub accesses: usize,
    pub energy: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub runs: usize,
    pub eta: Summary,
    pub eta_fraction: Summary,
    /// `W_t`, including the flight to the goal.
    pub energy_total: Summary,
    /// Energy when the work finished plus a direct flight to the goal; the
    /// total for missions that never finish.
    pub energy_at_completion: Summary,
    pub objective: Summary,
    pub accesses: Summary,
    pub access_attempts: usize,
    pub access_successes: usize,
    /// Pooled over all runs.
    pub access_success_rate: f64,
    /// Mean CPU time offered by stations that granted access, s.
    pub mean_cpu_per_access: f64,
    pub energy_vs_accesses: Vec<EnergyPoint>,
}

pub fn aggregate(runs: &[EpisodeLog], lambda: f64) -> Result<Metrics> {
    if runs.is_empty() {
        return Err(Error::argument("cannot aggregate zero runs"));
    }
    let collect = |f: &dyn Fn(&EpisodeLog) -> f64| runs.iter().map(f).collect::<Vec<f64>>();
    let attempts: usize = runs.iter().map(|r| r.accesses().count()).sum();
    let successes: usize = runs.iter().map(|r| r.successes().count()).sum();
    let cpu: f64 = runs.iter().flat_map(|r| r.successes()).map(|d| d.cpu_offered).sum();
    let mut by_accesses: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in runs {
        let slot = by_accesses.entry(r.accesses().count()).or_default();
        slot.0 += r.energy_total();
        slot.1 += 1;
    }
    Ok(Metrics {
        runs: runs.len(),
        eta: Summary::of(&collect(&|r| compute_eta(r).binary)),
        eta_fraction: Summary::of(&collect(&|r| compute_eta(r).fraction)),
        energy_total: Summary::of(&collect(&|r| r.energy_total())),
        energy_at_completion: Summary::of(&collect(&|r| r.energy_at_completion.unwrap_or(r.energy_total()))),
        objective: Summary::of(&collect(&|r| compute_objective(r, lambda))),
        accesses: Summary::of(&collect(&|r| r.accesses().count() as f64)),
        access_attempts: attempts,
        access_successes: successes,
        access_success_rate: if attempts > 0 { successes as f64 / attempts as f64 } else { 0.0 },
        mean_cpu_per_access: if successes > 0 { cpu / successes as f64 } else { 0.0 },
        energy_vs_accesses: by_accesses
            .into_iter()
            .map(|(accesses, (sum, n))| EnergyPoint { accesses, energy: sum / n as f64, runs: n })
            .collect(),
    })
}

impl Metrics {
    /// `(metric, value, ci)` rows for long-format tables.
    pub fn rows(&self) -> Vec<(&'static str, f64, f64)> {
        vec![
            ("eta", self.eta.mean, self.eta.ci95),
            ("eta_fraction", self.eta_fraction.mean, self.eta_fraction.ci95),
            ("energy_total", self.energy_total.mean, self.energy_total.ci95),
            ("energy_at_completion", self.energy_at_completion.mean, self.energy_at_completion.ci95),
            ("objective", self.objective.mean, self.objective.ci95),
            ("accesses", self.accesses.mean, self.accesses.ci95),
            ("access_success_rate", self.access_success_rate, 0.0),
            ("mean_cpu_per_access", self.mean_cpu_per_access, 0.0),
        ]
    }
}
