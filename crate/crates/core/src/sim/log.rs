use crate::energy::EnergyLedger;
use crate::kinematics::TrackSample;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccessOutcome {
    /// Access granted and the planned hover ran in full.
    Granted,
    /// Access granted but the station offered less CPU time than remained.
    Partial,
    /// Access granted, hover cut short by the time or energy budget.
    Truncated,
    /// No spectrum hole on arrival.
    Denied,
    /// Overflown after the task was already done.
    PassThrough,
}

impl AccessOutcome {
    pub fn is_access(self) -> bool {
        self != AccessOutcome::PassThrough
    }

    pub fn is_success(self) -> bool {
        matches!(self, AccessOutcome::Granted | AccessOutcome::Partial | AccessOutcome::Truncated)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub index: usize,
    pub period: usize,
    pub station: usize,
    /// Period active when the swarm reached the station.
    pub arrival_period: usize,
    pub outcome: AccessOutcome,
    /// Hover spent waiting for the chosen period, s.
    pub wait: f64,
    pub distance: f64,
    pub flight_time: f64,
    pub flight_energy: f64,
    pub hover_time: f64,
    pub hover_energy: f64,
    /// CPU time the station offered on access, s.
    pub cpu_offered: f64,
    /// Work actually processed, s.
    pub cpu_obtained: f64,
    /// Mission time at departure and at the end of the hover, s.
    pub t_start: f64,
    pub t_end: f64,
    pub remaining_work: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    /// The planner found no feasible action.
    Exhausted,
    /// The goal could not be reached within the budgets from the start.
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub planner: String,
    pub seed: u64,
    pub required_work: f64,
    pub decisions: Vec<DecisionRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<TrackSample>,
    pub ledger: EnergyLedger,
    pub completed: bool,
    /// The swarm reached the goal.
    pub concluded: bool,
    pub termination: Termination,
    pub work_done: f64,
    /// Mission time used, s.
    pub elapsed: f64,
    /// Energy spent when the work finished plus a direct flight to the goal
    /// from there. Equal to the total for planners that stop on completion.
    pub energy_at_completion: Option<f64>,
}

impl EpisodeLog {
    pub fn energy_total(&self) -> f64 {
        self.ledger.total()
    }

    pub fn accesses(&self) -> impl Iterator<Item = &DecisionRecord> {
        self.decisions.iter().filter(|d| d.outcome.is_access())
    }

    pub fn successes(&self) -> impl Iterator<Item = &DecisionRecord> {
        self.decisions.iter().filter(|d| d.outcome.is_success())
    }

    /// JSON lines: a header record, one record per decision, then a trailer.
    pub fn write_jsonl<W: Write>(&self, mut out: W, header: &serde_json::Value) -> std::io::Result<()> {
        let mut line = |v: serde_json::Value| -> std::io::Result<()> {
            serde_json::to_writer(&mut out, &v)?;
            out.write_all(b"\n")
        };
        line(
            serde_json::json!({ "record": "header", "provenance": header, "planner": self.planner, "seed": self.seed }),
        )?;
        for d in &self.decisions {
            let mut v = serde_json::to_value(d)?;
            v["record"] = "decision".into();
            line(v)?;
        }
        line(serde_json::json!({
            "record": "trailer",
            "completed": self.completed,
            "concluded": self.concluded,
            "termination": self.termination,
            "work_done": self.work_done,
            "required_work": self.required_work,
            "elapsed": self.elapsed,
            "energy_total": self.energy_total(),
            "energy_at_completion": self.energy_at_completion,
            "ledger": self.ledger,
        }))
    }
}
