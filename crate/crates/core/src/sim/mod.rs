//! Mission execution against the ground truth, metrics, and experiment
//! drivers.

pub mod constraints;
pub mod experiment;
pub mod knowledge;
pub mod log;
pub mod metrics;
pub mod regret;

pub use crate::kinematics::{leg_duration, synthesize_leg, TrackSample};
pub use log::{AccessOutcome, DecisionRecord, EpisodeLog, Termination};
pub use metrics::{aggregate, compute_eta, compute_objective, Eta, Metrics, Summary};

use crate::energy::{EnergyLedger, PowerModel};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::mcts::{handle_failure, Estimates, Failure, PlanContext, PlanState, Planner};
use crate::rng::{stream, streams, substream, SimRng};
use crate::scenario::{sample_cpu_cycles, sample_spectrum_available, World};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// CPU time the task needs, s.
    pub required_work: f64,
    /// Mission time budget `T`, s.
    pub deadline: f64,
    /// Offload time added to every granted access, s.
    pub t_com: f64,
    /// Worth of completing the task, J.
    pub lambda: f64,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.required_work > 0.0 && self.deadline > 0.0 && self.t_com >= 0.0 && self.lambda >= 0.0) {
            return Err(Error::config("task needs positive required_work and deadline, non-negative t_com and lambda"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeOptions {
    /// Track sampling step, s.
    pub dt: f64,
    pub record_track: bool,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self { dt: 1.0, record_track: true }
    }
}

/// Ground-truth draws for one station visit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub granted: bool,
    pub cpu: f64,
}

/// Executes one decision; `draw` supplies the ground truth met on arrival
/// in the given period.
pub fn execute_decision(
    state: &mut PlanState,
    ctx: &PlanContext<'_>,
    decision: crate::mcts::Decision,
    draw: impl FnOnce(usize) -> Arrival,
    index: usize,
) -> DecisionRecord {
    let t_start = state.elapsed;
    let energy_before = state.energy_used;
    let wait = if state.period != Some(decision.period) { state.enter_period(ctx, decision.period) } else { 0.0 };
    let wait_energy = state.energy_used - energy_before;
    let (distance, flight_time, flight_energy) = state.fly_to(ctx, decision.station);
    let arrival_period = state.active_period(ctx);
    let bs = decision.station;
    let (outcome, hover, cpu_offered) = if state.is_complete() {
        (AccessOutcome::PassThrough, None, 0.0)
    } else {
        let arrival = draw(arrival_period);
        if arrival.granted {
            let needed = state.remaining_work;
            let h = state.hover(ctx, arrival.cpu);
            let outcome = if h.truncated {
                AccessOutcome::Truncated
            } else if arrival.cpu < needed {
                AccessOutcome::Partial
            } else {
                AccessOutcome::Granted
            };
            (outcome, Some(h), arrival.cpu)
        } else {
            (AccessOutcome::Denied, None, 0.0)
        }
    };
    state.visited.insert(bs);
    if outcome == AccessOutcome::Denied {
        handle_failure(state, Failure::Station(bs));
    }
    DecisionRecord {
        index,
        period: decision.period,
        station: bs,
        arrival_period,
        outcome,
        wait,
        distance,
        flight_time,
        flight_energy,
        hover_time: wait + hover.map_or(0.0, |h| h.time),
        hover_energy: wait_energy + hover.map_or(0.0, |h| h.energy),
        cpu_offered,
        cpu_obtained: hover.map_or(0.0, |h| h.work),
        t_start,
        t_end: state.elapsed,
        remaining_work: state.remaining_work,
    }
}

#[derive(Debug, Clone)]
struct Recorder {
    enabled: bool,
    dt: f64,
    samples: Vec<TrackSample>,
}

impl Recorder {
    fn rest(&mut self, t: f64, at: Point3) {
        if self.enabled {
            self.samples.push(TrackSample { t, position: at, velocity: Point3::ZERO });
        }
    }

    fn leg(&mut self, from: Point3, to: Point3, t0: f64, power: &PowerModel) {
        if self.enabled {
            let (_, track) = synthesize_leg(from, to, power.cruise_speed, power.a_max, self.dt, t0);
            // The first sample repeats the hover end.
            self.samples.extend(track.into_iter().skip(1));
        }
    }
}

/// A mission in progress. [`run_episode`] drives it with ground-truth draws;
/// it can also be cloned to explore outcomes exhaustively.
#[derive(Debug, Clone)]
pub struct Mission<'a> {
    pub ctx: PlanContext<'a>,
    pub state: PlanState,
    pub ledger: EnergyLedger,
    pub decisions: Vec<DecisionRecord>,
    pub energy_at_completion: Option<f64>,
    reachable: bool,
    track: Recorder,
}

impl<'a> Mission<'a> {
    pub fn new(ctx: PlanContext<'a>, options: &EpisodeOptions) -> Result<Self> {
        ctx.task.validate()?;
        ctx.power.validate()?;
        if options.dt.is_nan() || options.dt <= 0.0 {
            return Err(Error::config("episode dt must be positive"));
        }
        let state = PlanState::initial(ctx.world, ctx.power, ctx.task);
        let mut track = Recorder { enabled: options.record_track, dt: options.dt, samples: Vec::new() };
        track.rest(0.0, state.position);
        let reachable = state.goal_is_reachable(&ctx);
        Ok(Self {
            ctx,
            state,
            ledger: EnergyLedger::default(),
            decisions: Vec::new(),
            energy_at_completion: None,
            reachable,
            track,
        })
    }

    /// Whether `planner` should be asked for another decision.
    pub fn wants_decision(&self, planner: &dyn Planner) -> bool {
        self.reachable && (!self.state.is_complete() || planner.continues_after_completion())
    }

    /// Asks `planner` for the next decision; `None` when it has none.
    pub fn plan(&self, planner: &mut dyn Planner, rng: &mut SimRng) -> Result<Option<crate::mcts::Decision>> {
        match planner.plan_next(&self.state, &self.ctx, rng) {
            Ok(d) => {
                check_decision(&self.state, &self.ctx, d)?;
                Ok(Some(d))
            }
            Err(Error::PlanningExhausted(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Executes `decision` and tells `planner` how it went.
    pub fn step(
        &mut self,
        planner: &mut dyn Planner,
        decision: crate::mcts::Decision,
        draw: impl FnOnce(usize) -> Arrival,
    ) -> &DecisionRecord {
        let ctx = self.ctx;
        let from = self.state.position;
        let hover_start = self.state.elapsed;
        let was_complete = self.state.is_complete();
        let record = execute_decision(&mut self.state, &ctx, decision, draw, self.decisions.len());
        if record.wait > 0.0 {
            self.track.rest(hover_start + record.wait, from);
        }
        self.track.leg(from, self.state.position, hover_start + record.wait, ctx.power);
        if record.hover_time > record.wait {
            self.track.rest(record.t_end, self.state.position);
        }
        self.ledger.record_leg(record.flight_energy, record.hover_energy);
        if record.outcome == AccessOutcome::Denied {
            planner.handle_failure(Failure::Station(decision.station));
        }
        planner.advance(decision, record.outcome.is_success());
        if self.state.is_complete() && !was_complete {
            let (_, goal_energy) = ctx.goal_leg(self.state.position);
            self.energy_at_completion = Some(self.ledger.total() + goal_energy);
        }
        if !self.state.is_complete() {
            if let Some(p) = self.state.period.filter(|&p| self.state.active_period(&ctx) != p) {
                handle_failure(&mut self.state, Failure::Period(p));
                planner.handle_failure(Failure::Period(p));
            }
        }
        self.decisions.push(record);
        self.decisions.last().expect("just pushed")
    }

    /// Flies to the goal when that is still possible and closes the log.
    pub fn finish(mut self, planner: &dyn Planner, seed: u64) -> EpisodeLog {
        let ctx = self.ctx;
        let concluded = self.reachable && self.state.goal_is_reachable(&ctx);
        if concluded {
            let from = self.state.position;
            let distance = from.distance(ctx.world.goal);
            let t0 = self.state.elapsed;
            let energy = ctx.power.cruise_energy(distance);
            self.state.elapsed += ctx.flight_time(distance);
            self.state.energy_used += energy;
            self.state.position = ctx.world.goal;
            if distance > 0.0 {
                self.ledger.record_leg(energy, 0.0);
            }
            self.track.leg(from, ctx.world.goal, t0, ctx.power);
        }
        let completed = self.state.is_complete();
        let termination = if completed {
            Termination::Completed
        } else if self.reachable {
            Termination::Exhausted
        } else {
            Termination::Unreachable
        };
        EpisodeLog {
            planner: planner.name().to_string(),
            seed,
            required_work: ctx.task.required_work,
            decisions: self.decisions,
            trajectory: self.track.samples,
            ledger: self.ledger,
            completed,
            concluded,
            termination,
            work_done: ctx.task.required_work - self.state.remaining_work,
            elapsed: self.state.elapsed,
            energy_at_completion: self.energy_at_completion,
        }
    }
}

/// Runs one mission: plan, fly, try to access, re-plan on failure, and fly
/// to the goal once the task is done or no feasible action remains.
pub fn run_episode(
    world: &World,
    planner: &mut dyn Planner,
    task: &TaskSpec,
    power: &PowerModel,
    estimates: &Estimates,
    seed: u64,
    options: &EpisodeOptions,
) -> Result<EpisodeLog> {
    let ctx = PlanContext { world, power, task, estimates };
    let mut mission = Mission::new(ctx, options)?;
    let mut planner_rng = stream(seed, streams::PLANNER);
    while mission.wants_decision(planner) {
        let Some(decision) = mission.plan(planner, &mut planner_rng)? else { break };
        mission.step(planner, decision, |period| {
            // Keyed by station and period so all planners face the same draws.
            let key = (decision.station * world.num_periods() + period) as u64;
            draw_arrival(world, decision.station, period, &mut substream(seed, streams::EPISODE, key))
        });
    }
    Ok(mission.finish(planner, seed))
}

fn draw_arrival(world: &World, bs: usize, period: usize, rng: &mut SimRng) -> Arrival {
    let granted = sample_spectrum_available(world, bs, period, rng).expect("station index checked");
    let cpu = if granted { sample_cpu_cycles(world, bs, period, rng).expect("station index checked") } else { 0.0 };
    Arrival { granted, cpu }
}

/// Rejects planner output that breaks the shared feasibility contract.
fn check_decision(state: &PlanState, ctx: &PlanContext<'_>, decision: crate::mcts::Decision) -> Result<()> {
    let ok_period = decision.period < ctx.world.num_periods() && !state.deselected_periods.contains(decision.period);
    let ok_station = decision.station < ctx.world.num_stations() && state.station_is_open(decision.station);
    let mut next = *state;
    if ok_period && next.period != Some(decision.period) {
        next.enter_period(ctx, decision.period);
    }
    let feasible = ok_station && next.leg_is_feasible(ctx, decision.station, &next.project_leg(ctx, decision.station));
    if ok_period && feasible {
        Ok(())
    } else {
        Err(Error::argument(format!("planner returned an infeasible decision {decision:?}")))
    }
}

#[cfg(test)]
mod tests;
