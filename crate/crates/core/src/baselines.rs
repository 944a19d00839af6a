//! Reference planners: shortest-path tour over every station, ε-greedy and
//! flat UCB over the modified reward, and tree search without
//! backpropagation.

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::mcts::{
    best_station, modified_reward, select_period_among, Decision, MctsPlanner, PeriodScore, PlanContext, PlanState,
    Planner, PlannerConfig, RewardWeights,
};
use crate::rng::SimRng;
use crate::scenario::World;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Above this many stations the tour falls back to a heuristic.
pub const EXACT_TOUR_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourPlan {
    pub order: Vec<usize>,
    /// Length of the open path from the start through `order`.
    pub total_distance: f64,
}

/// Length of the open path `start → points[order[0]] → …`, summed in order.
pub fn path_length(start: Point3, points: &[Point3], order: &[usize]) -> f64 {
    let mut at = start;
    let mut total = 0.0;
    for &i in order {
        total += at.distance(points[i]);
        at = points[i];
    }
    total
}

/// Shortest open path from the start through every station's hover point.
pub fn tsp_tour(world: &World) -> TourPlan {
    let points: Vec<Point3> = (0..world.num_stations()).map(|bs| world.hover_point(bs)).collect();
    shortest_open_path(world.start, &points)
}

pub fn shortest_open_path(start: Point3, points: &[Point3]) -> TourPlan {
    let order = if points.len() <= EXACT_TOUR_LIMIT {
        held_karp(start, points)
    } else {
        two_opt(start, points, nearest_neighbor(start, points))
    };
    TourPlan { total_distance: path_length(start, points, &order), order }
}

/// Subset dynamic programme. Costs accumulate leg by leg from the start, so
/// the optimum equals the in-order sum of its legs exactly.
fn held_karp(start: Point3, points: &[Point3]) -> Vec<usize> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let full = (1usize << n) - 1;
    let mut cost = vec![f64::INFINITY; (1 << n) * n];
    let mut parent = vec![usize::MAX; (1 << n) * n];
    let at = |mask: usize, j: usize| mask * n + j;
    for j in 0..n {
        cost[at(1 << j, j)] = start.distance(points[j]);
    }
    for mask in 1..=full {
        for last in 0..n {
            let c = cost[at(mask, last)];
            if mask & (1 << last) == 0 || !c.is_finite() {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let m2 = mask | (1 << next);
                let cand = c + points[last].distance(points[next]);
                if cand < cost[at(m2, next)] {
                    cost[at(m2, next)] = cand;
                    parent[at(m2, next)] = last;
                }
            }
        }
    }
    let mut last = (0..n).fold(0, |best, j| if cost[at(full, j)] < cost[at(full, best)] { j } else { best });
    let mut mask = full;
    let mut order = Vec::with_capacity(n);
    loop {
        order.push(last);
        let p = parent[at(mask, last)];
        mask &= !(1 << last);
        if p == usize::MAX {
            break;
        }
        last = p;
    }
    order.reverse();
    order
}

fn nearest_neighbor(start: Point3, points: &[Point3]) -> Vec<usize> {
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut at = start;
    let mut order = Vec::with_capacity(points.len());
    while !left.is_empty() {
        let k = (0..left.len())
            .min_by(|&a, &b| at.distance(points[left[a]]).total_cmp(&at.distance(points[left[b]])))
            .expect("non-empty");
        let next = left.remove(k);
        at = points[next];
        order.push(next);
    }
    order
}

fn two_opt(start: Point3, points: &[Point3], mut order: Vec<usize>) -> Vec<usize> {
    let mut best = path_length(start, points, &order);
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..order.len() {
            for j in i + 1..order.len() {
                order[i..=j].reverse();
                let len = path_length(start, points, &order);
                if len < best - 1e-9 {
                    best = len;
                    improved = true;
                } else {
                    order[i..=j].reverse();
                }
            }
        }
    }
    order
}

/// Offloading period chosen by the baselines: best estimate among periods
/// that still leave a feasible station.
fn baseline_period(state: &PlanState, ctx: &PlanContext<'_>) -> Result<usize> {
    select_period_among(ctx.estimates, state.feasible_periods(ctx), PeriodScore::Max)
        .ok_or_else(|| Error::PlanningExhausted("no period leaves a feasible station".into()))
}

/// First period, counting from the one active now, that still leaves a
/// feasible station. The tour ignores the spectrum estimates.
fn earliest_period(state: &PlanState, ctx: &PlanContext<'_>) -> Result<usize> {
    let feasible = state.feasible_periods(ctx);
    let now = state.active_period(ctx);
    let t_d = ctx.world.num_periods();
    (0..t_d)
        .map(|k| (now + k) % t_d)
        .find(|p| feasible.contains(p))
        .ok_or_else(|| Error::PlanningExhausted("no period leaves a feasible station".into()))
}

/// State after committing to `period`, plus the feasible stations from it.
fn station_candidates(state: &PlanState, ctx: &PlanContext<'_>, period: usize) -> (PlanState, Vec<usize>) {
    let mut next = *state;
    if next.period != Some(period) {
        next.enter_period(ctx, period);
    }
    let stations = next.feasible_stations(ctx);
    (next, stations)
}

/// Visits every station along the shortest open path, continuing after the
/// task is done. Infeasible stations are skipped; the tour flies in the
/// period active at departure when that period leaves a feasible station.
#[derive(Debug, Clone, Default)]
pub struct TspPlanner {
    tour: Option<TourPlan>,
}

impl TspPlanner {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Planner for TspPlanner {
    fn name(&self) -> &'static str {
        "tsp"
    }

    fn plan_next(&mut self, state: &PlanState, ctx: &PlanContext<'_>, _rng: &mut SimRng) -> Result<Decision> {
        let tour = self.tour.get_or_insert_with(|| tsp_tour(ctx.world));
        let period = match state.period {
            Some(p) => p,
            None => earliest_period(state, ctx)?,
        };
        let (_, stations) = station_candidates(state, ctx, period);
        tour.order
            .iter()
            .copied()
            .find(|bs| stations.contains(bs))
            .map(|station| Decision { period, station })
            .ok_or_else(|| Error::PlanningExhausted("tour has no feasible station left".into()))
    }

    fn continues_after_completion(&self) -> bool {
        true
    }
}

/// Exploits the modified reward with probability `1 − ε`, otherwise picks a
/// uniformly random feasible period and station.
pub fn eps_greedy_plan(
    state: &PlanState,
    ctx: &PlanContext<'_>,
    epsilon: f64,
    weights: RewardWeights,
    rng: &mut SimRng,
) -> Result<Decision> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::argument(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    let explore = rng.random_bool(epsilon);
    let period = match state.period {
        Some(p) => p,
        None if explore => {
            let periods = state.feasible_periods(ctx);
            if periods.is_empty() {
                return Err(Error::PlanningExhausted("no period leaves a feasible station".into()));
            }
            periods[rng.random_range(0..periods.len())]
        }
        None => baseline_period(state, ctx)?,
    };
    let (next, stations) = station_candidates(state, ctx, period);
    if stations.is_empty() {
        return Err(Error::PlanningExhausted("no feasible station".into()));
    }
    let station = if explore {
        stations[rng.random_range(0..stations.len())]
    } else {
        best_station(&next, ctx, &stations, weights).expect("non-empty")
    };
    Ok(Decision { period, station })
}

#[derive(Debug, Clone)]
pub struct EpsGreedyPlanner {
    pub epsilon: f64,
    pub weights: RewardWeights,
}

impl Planner for EpsGreedyPlanner {
    fn name(&self) -> &'static str {
        "eps-greedy"
    }

    fn plan_next(&mut self, state: &PlanState, ctx: &PlanContext<'_>, rng: &mut SimRng) -> Result<Decision> {
        eps_greedy_plan(state, ctx, self.epsilon, self.weights, rng)
    }
}

/// Flat UCB over stations: modified reward plus an exploration bonus from
/// the pre-learning access counts.
#[derive(Debug, Clone)]
pub struct UcbPlanner {
    pub eta_c: f64,
    pub weights: RewardWeights,
}

impl Planner for UcbPlanner {
    fn name(&self) -> &'static str {
        "ucb"
    }

    fn plan_next(&mut self, state: &PlanState, ctx: &PlanContext<'_>, _rng: &mut SimRng) -> Result<Decision> {
        let period = match state.period {
            Some(p) => p,
            None => baseline_period(state, ctx)?,
        };
        let (next, stations) = station_candidates(state, ctx, period);
        let total: u64 = (0..ctx.estimates.num_stations).map(|bs| ctx.estimates.counts(bs, period).pulls).sum();
        let log_total = (total.max(1) as f64).ln();
        let mut best: Option<(usize, f64)> = None;
        for &bs in &stations {
            let leg = next.project_leg(ctx, bs);
            let pulls = ctx.estimates.counts(bs, period).pulls;
            let bonus = if pulls == 0 { f64::INFINITY } else { self.eta_c * (2.0 * log_total / pulls as f64).sqrt() };
            let score = modified_reward(
                ctx.estimates.spectrum(bs, period),
                ctx.estimates.cpu(bs, period),
                leg.energy(),
                self.weights,
                next.remaining_work.max(f64::MIN_POSITIVE),
                ctx.power.battery,
            ) + bonus;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((bs, score));
            }
        }
        best.map(|(station, _)| Decision { period, station })
            .ok_or_else(|| Error::PlanningExhausted("no feasible station".into()))
    }
}

/// One decision of the search planner with leaf-only credit.
pub fn uct_no_backprop_plan(
    state: &PlanState,
    ctx: &PlanContext<'_>,
    config: PlannerConfig,
    rng: &mut SimRng,
) -> Result<Decision> {
    MctsPlanner::without_backprop(config).plan_next(state, ctx, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    #[test]
    fn collinear_stations_in_order() {
        let pts = [1000.0, 2000.0, 3000.0].map(|x| Point3::new(x, 0.0, 0.0));
        let tour = shortest_open_path(Point3::ZERO, &pts);
        assert_eq!(tour.order, vec![0, 1, 2]);
        assert_eq!(tour.total_distance, 3000.0);
    }

    #[test]
    fn unit_square_perimeter() {
        let pts = [(0.0, 1.0), (1.0, 1.0), (1.0, 0.0), (0.0, 0.0)].map(|(x, y)| Point3::new(x, y, 0.0));
        let tour = shortest_open_path(Point3::ZERO, &pts);
        let brute = (0..4).permutations(4).map(|o| path_length(Point3::ZERO, &pts, &o)).fold(f64::INFINITY, f64::min);
        assert_eq!(tour.total_distance, brute);
        // The corner at the start costs nothing, then three unit sides.
        assert!((tour.total_distance - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_station() {
        let p = Point3::new(3.0, 4.0, 0.0);
        let tour = shortest_open_path(Point3::ZERO, &[p]);
        assert_eq!((tour.order, tour.total_distance), (vec![0], 5.0));
    }

    #[test]
    fn heuristic_above_exact_limit_visits_everything() {
        let pts: Vec<Point3> = (0..15).map(|i| Point3::new((i * 7 % 15) as f64, (i * 3 % 5) as f64, 0.0)).collect();
        let tour = shortest_open_path(Point3::ZERO, &pts);
        let mut seen = tour.order.clone();
        seen.sort();
        assert_eq!(seen, (0..15).collect::<Vec<_>>());
        assert!(tour.total_distance <= path_length(Point3::ZERO, &pts, &nearest_neighbor(Point3::ZERO, &pts)));
    }
}
