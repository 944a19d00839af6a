//! Mission state shared by every planner, plus the leg projections and
//! budget-feasibility layer that prunes actions.

use crate::bandit::{ArmStats, BanditState};
use crate::energy::{check_totals, Limits, PowerModel};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::kinematics::leg_duration;
use crate::scenario::World;
use crate::sim::TaskSpec;
use serde::{Deserialize, Serialize};

/// Small index set (stations or periods) backed by a bit mask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSet(u64);

impl IndexSet {
    pub const CAPACITY: usize = 64;

    pub fn contains(self, i: usize) -> bool {
        i < Self::CAPACITY && self.0 & (1 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < Self::CAPACITY, "index set holds at most 64 entries");
        self.0 |= 1 << i;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..Self::CAPACITY).filter(move |&i| self.contains(i))
    }
}

impl From<Vec<usize>> for IndexSet {
    fn from(ids: Vec<usize>) -> Self {
        let mut set = IndexSet::default();
        for i in ids {
            set.insert(i);
        }
        set
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(set: IndexSet) -> Self {
        set.iter().collect()
    }
}

/// What the planners believe about every (station, period) arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub num_stations: usize,
    pub num_periods: usize,
    /// `P̂_sp`, station-major.
    pub spectrum: Vec<f64>,
    /// `L̂_cp` in seconds, station-major.
    pub cpu: Vec<f64>,
    /// Access counts behind `spectrum`.
    pub counts: Vec<ArmStats>,
}

impl Estimates {
    pub fn new(num_stations: usize, num_periods: usize, spectrum: Vec<f64>, cpu: Vec<f64>) -> Result<Self> {
        let arms = num_stations * num_periods;
        if spectrum.len() != arms || cpu.len() != arms {
            return Err(Error::argument(format!("estimates need {arms} entries")));
        }
        if spectrum.iter().any(|p| !(0.0..=1.0).contains(p)) || cpu.iter().any(|&c| c < 0.0) {
            return Err(Error::argument("estimates out of range"));
        }
        Ok(Self { num_stations, num_periods, spectrum, cpu, counts: vec![ArmStats::default(); arms] })
    }

    /// Perfect knowledge of the ground truth.
    pub fn exact(world: &World) -> Self {
        let (n, t_d) = (world.num_stations(), world.num_periods());
        let mut spectrum = Vec::with_capacity(n * t_d);
        let mut cpu = Vec::with_capacity(n * t_d);
        for bs in 0..n {
            for p in 0..t_d {
                spectrum.push(world.availability(bs, p));
                cpu.push(world.stations[bs].cpu.mean[p]);
            }
        }
        Self { num_stations: n, num_periods: t_d, spectrum, cpu, counts: vec![ArmStats::default(); n * t_d] }
    }

    /// Spectrum estimates from a pre-learning run; arms never pulled fall
    /// back to `unknown`.
    pub fn from_bandit(state: &BanditState, cpu: Vec<f64>, unknown: f64) -> Result<Self> {
        let spectrum = state.arms.iter().map(|a| a.mean().unwrap_or(unknown)).collect();
        let mut estimates = Self::new(state.num_stations, state.num_periods, spectrum, cpu)?;
        estimates.counts = state.arms.clone();
        Ok(estimates)
    }

    fn arm(&self, bs: usize, period: usize) -> usize {
        bs * self.num_periods + period
    }

    pub fn spectrum(&self, bs: usize, period: usize) -> f64 {
        self.spectrum[self.arm(bs, period)]
    }

    pub fn cpu(&self, bs: usize, period: usize) -> f64 {
        self.cpu[self.arm(bs, period)]
    }

    pub fn counts(&self, bs: usize, period: usize) -> ArmStats {
        self.counts[self.arm(bs, period)]
    }
}

/// Everything a planner may consult besides the mission state. The world is
/// used for geometry and the time grid only; resource knowledge comes from
/// `estimates`.
#[derive(Debug, Clone, Copy)]
pub struct PlanContext<'a> {
    pub world: &'a World,
    pub power: &'a PowerModel,
    pub task: &'a TaskSpec,
    pub estimates: &'a Estimates,
}

impl PlanContext<'_> {
    pub fn flight_time(&self, distance: f64) -> f64 {
        leg_duration(distance, self.power.cruise_speed, self.power.a_max)
    }

    /// Time and energy to fly from `from` straight to the goal.
    pub fn goal_leg(&self, from: Point3) -> (f64, f64) {
        let d = from.distance(self.world.goal);
        (self.flight_time(d), self.power.cruise_energy(d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanState {
    pub position: Point3,
    /// Committed offloading period, if any.
    pub period: Option<usize>,
    pub departed: bool,
    /// Wall-clock time of day, seconds.
    pub clock: f64,
    /// Mission time spent since departure, seconds.
    pub elapsed: f64,
    pub energy_used: f64,
    pub remaining_work: f64,
    pub limits: Limits,
    pub visited: IndexSet,
    pub deselected_bs: IndexSet,
    pub deselected_periods: IndexSet,
}

/// Projected cost of one station visit from a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegProjection {
    pub distance: f64,
    pub flight_time: f64,
    pub flight_energy: f64,
    /// Expected hover: offload time plus the expected useful CPU time.
    pub hover_time: f64,
    pub hover_energy: f64,
}

impl LegProjection {
    pub fn time(&self) -> f64 {
        self.flight_time + self.hover_time
    }

    pub fn energy(&self) -> f64 {
        self.flight_energy + self.hover_energy
    }
}

/// Result of hovering at a station that granted access.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoverOutcome {
    pub time: f64,
    pub energy: f64,
    pub work: f64,
    /// The hover was cut short to keep the goal reachable.
    pub truncated: bool,
}

impl PlanState {
    pub fn initial(world: &World, power: &PowerModel, task: &TaskSpec) -> Self {
        Self {
            position: world.start,
            period: None,
            departed: false,
            clock: world.launch,
            elapsed: 0.0,
            energy_used: 0.0,
            remaining_work: task.required_work,
            limits: Limits { deadline: task.deadline, battery: power.battery },
            visited: IndexSet::default(),
            deselected_bs: IndexSet::default(),
            deselected_periods: IndexSet::default(),
        }
    }

    pub fn time_left(&self) -> f64 {
        (self.limits.deadline - self.elapsed).max(0.0)
    }

    pub fn energy_left(&self) -> f64 {
        (self.limits.battery - self.energy_used).max(0.0)
    }

    pub fn is_complete(&self) -> bool {
        self.remaining_work <= 0.0
    }

    fn remaining_limits(&self) -> Limits {
        Limits { deadline: self.limits.deadline - self.elapsed, battery: self.limits.battery - self.energy_used }
    }

    /// Seconds of hovering needed before `period` is active. Choosing the
    /// period before departure is free: the mission simply starts then.
    pub fn period_wait(&self, ctx: &PlanContext<'_>, period: usize) -> f64 {
        if self.departed {
            ctx.world.grid.wait_until(period, self.clock)
        } else {
            0.0
        }
    }

    /// Period whose resources an arrival at the current clock would meet.
    pub fn active_period(&self, ctx: &PlanContext<'_>) -> usize {
        ctx.world.grid.period_at(self.clock)
    }

    pub fn project_leg(&self, ctx: &PlanContext<'_>, bs: usize) -> LegProjection {
        let target = ctx.world.hover_point(bs);
        let distance = self.position.distance(target);
        let flight_time = ctx.flight_time(distance);
        let period = ctx.world.grid.period_at(self.clock + flight_time);
        let useful = ctx.estimates.cpu(bs, period).min(self.remaining_work.max(0.0));
        let hover_time = ctx.task.t_com + useful;
        LegProjection {
            distance,
            flight_time,
            flight_energy: ctx.power.cruise_energy(distance),
            hover_time,
            hover_energy: ctx.power.p_hover * hover_time,
        }
    }

    /// The leg plus the flight on to the goal fits both budgets.
    pub fn leg_is_feasible(&self, ctx: &PlanContext<'_>, bs: usize, leg: &LegProjection) -> bool {
        let (goal_time, goal_energy) = ctx.goal_leg(ctx.world.hover_point(bs));
        check_totals(leg.energy() + goal_energy, leg.time() + goal_time, self.remaining_limits()).is_feasible()
    }

    pub fn goal_is_reachable(&self, ctx: &PlanContext<'_>) -> bool {
        let (t, e) = ctx.goal_leg(self.position);
        check_totals(e, t, self.remaining_limits()).is_feasible()
    }

    pub fn station_is_open(&self, bs: usize) -> bool {
        !self.visited.contains(bs) && !self.deselected_bs.contains(bs)
    }

    /// Unvisited, non-deselected stations whose projected leg fits the budgets.
    pub fn feasible_stations(&self, ctx: &PlanContext<'_>) -> Vec<usize> {
        (0..ctx.world.num_stations())
            .filter(|&bs| self.station_is_open(bs) && self.leg_is_feasible(ctx, bs, &self.project_leg(ctx, bs)))
            .collect()
    }

    /// Non-deselected periods from which at least one station is feasible.
    pub fn feasible_periods(&self, ctx: &PlanContext<'_>) -> Vec<usize> {
        (0..ctx.world.num_periods())
            .filter(|&p| !self.deselected_periods.contains(p))
            .filter(|&p| {
                let mut next = *self;
                next.enter_period(ctx, p);
                next.elapsed <= self.limits.deadline && !next.feasible_stations(ctx).is_empty()
            })
            .collect()
    }

    /// Commits to `period`, hovering until it begins if already airborne.
    /// Returns the wait in seconds.
    pub fn enter_period(&mut self, ctx: &PlanContext<'_>, period: usize) -> f64 {
        let wait = self.period_wait(ctx, period);
        if self.departed {
            self.clock += wait;
            self.elapsed += wait;
            self.energy_used += ctx.power.p_hover * wait;
        } else {
            self.clock = ctx.world.grid.period_start(period);
        }
        self.period = Some(period);
        wait
    }

    /// Flies to the hover point of `bs`. Returns (distance, duration, energy).
    pub fn fly_to(&mut self, ctx: &PlanContext<'_>, bs: usize) -> (f64, f64, f64) {
        let target = ctx.world.hover_point(bs);
        let distance = self.position.distance(target);
        let duration = ctx.flight_time(distance);
        let energy = ctx.power.cruise_energy(distance);
        self.position = target;
        self.departed = true;
        self.clock += duration;
        self.elapsed += duration;
        self.energy_used += energy;
        (distance, duration, energy)
    }

    /// Hovers for the offload plus up to `cpu_available` seconds of work,
    /// never past the point where the goal would become unreachable.
    pub fn hover(&mut self, ctx: &PlanContext<'_>, cpu_available: f64) -> HoverOutcome {
        let wanted = ctx.task.t_com + cpu_available.max(0.0).min(self.remaining_work.max(0.0));
        let (goal_time, goal_energy) = ctx.goal_leg(self.position);
        let slack_time = self.limits.deadline - self.elapsed - goal_time;
        let slack_energy = (self.limits.battery - self.energy_used - goal_energy) / ctx.power.p_hover;
        // Shave a relative hair so that rounding never tips a budget over.
        let cap = (slack_time.min(slack_energy) * (1.0 - 1e-12) - 1e-9).max(0.0);
        let time = wanted.min(cap);
        let work = (time - ctx.task.t_com).max(0.0).min(self.remaining_work.max(0.0));
        let energy = ctx.power.p_hover * time;
        self.clock += time;
        self.elapsed += time;
        self.energy_used += energy;
        self.remaining_work = (self.remaining_work - work).max(0.0);
        if self.remaining_work < 1e-9 {
            self.remaining_work = 0.0;
        }
        HoverOutcome { time, energy, work, truncated: time < wanted }
    }

    /// Books a visit to `bs` that ended in success or failure.
    pub fn mark_visited(&mut self, bs: usize, granted: bool) {
        self.visited.insert(bs);
        if !granted {
            self.deselected_bs.insert(bs);
        }
    }
}
