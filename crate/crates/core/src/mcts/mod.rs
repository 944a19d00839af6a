//! Spatio-temporal planner: a search tree whose first level picks the
//! offloading period and whose deeper levels pick the station visit order.
//!
//! Every iteration walks the tree with UCB selection, adds one node,
//! simulates the remainder of the mission under the estimated resource
//! model, and credits the outcome back along the path. Below each station
//! node the tree branches on the sampled access outcome, so a subtree kept
//! after a real visit only holds statistics for the outcome that happened.

pub mod learner;
pub mod reward;
pub mod state;
pub mod tree;

pub use learner::{LayeredTask, TreeLearner};
pub use reward::{modified_reward, station_score, terminal_reward, RewardMode, RewardWeights};
pub use state::{Estimates, IndexSet, LegProjection, PlanContext, PlanState};
pub use tree::{Backprop, Node, NodeId, NodeKind, NodeSnapshot, Tree};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodScore {
    /// Best station estimate within the period.
    #[default]
    Max,
    /// Mean station estimate within the period.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub eta_c: f64,
    /// Search iterations per decision.
    pub iterations: usize,
    /// Maximum simulated station visits per rollout.
    pub rollout_horizon: usize,
    /// Objective weight of completion in joules; the task's value when unset.
    pub lambda: Option<f64>,
    pub reward: RewardMode,
    /// Probability that a rollout step picks a random feasible station.
    pub rollout_epsilon: f64,
    pub period_score: PeriodScore,
    /// Rescale sibling means to [0, 1] before adding the exploration bonus.
    pub normalize_values: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 0.5,
            c3: -1.0,
            eta_c: 0.2,
            iterations: 2000,
            rollout_horizon: 16,
            lambda: None,
            reward: RewardMode::Objective,
            rollout_epsilon: 0.1,
            period_score: PeriodScore::Max,
            normalize_values: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(Error::config("planner.c1 and planner.c2 must be non-negative"));
        }
        if self.c3 > 0.0 {
            return Err(Error::config("planner.c3 must be non-positive"));
        }
        if !(0.0..=1.0).contains(&self.rollout_epsilon) || self.eta_c < 0.0 {
            return Err(Error::config("planner.rollout_epsilon must lie in [0, 1] and eta_c be non-negative"));
        }
        Ok(())
    }

    pub fn weights(&self) -> RewardWeights {
        RewardWeights { c1: self.c1, c2: self.c2, c3: self.c3 }
    }

    pub fn lambda_for(&self, ctx: &PlanContext<'_>) -> f64 {
        self.lambda.unwrap_or(ctx.task.lambda)
    }
}

/// Next move: offload in `period`, flying to `station`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decision {
    pub period: usize,
    pub station: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Failure {
    /// The station denied access.
    Station(usize),
    /// The period ran out before the task finished.
    Period(usize),
}

/// Common interface of the searching planner and the baselines.
pub trait Planner {
    fn name(&self) -> &'static str;

    fn plan_next(&mut self, state: &PlanState, ctx: &PlanContext<'_>, rng: &mut SimRng) -> Result<Decision>;

    /// Called once `decision` has been flown; `granted` tells whether the
    /// station served the swarm.
    fn advance(&mut self, _decision: Decision, _granted: bool) {}

    fn handle_failure(&mut self, _failure: Failure) {}

    /// Keeps visiting stations after the work is done.
    fn continues_after_completion(&self) -> bool {
        false
    }
}

/// Records a failure in the mission state.
pub fn handle_failure(state: &mut PlanState, failed: Failure) {
    match failed {
        Failure::Station(bs) => state.deselected_bs.insert(bs),
        Failure::Period(p) => {
            state.deselected_periods.insert(p);
            if state.period == Some(p) {
                state.period = None;
            }
        }
    }
}

pub fn period_value(estimates: &Estimates, period: usize, score: PeriodScore) -> f64 {
    let values = (0..estimates.num_stations).map(|bs| estimates.spectrum(bs, period));
    match score {
        PeriodScore::Max => values.fold(f64::NEG_INFINITY, f64::max),
        PeriodScore::Mean => values.sum::<f64>() / estimates.num_stations.max(1) as f64,
    }
}

/// Best non-deselected period by estimated availability; lowest index on ties.
pub fn select_period(estimates: &Estimates, deselected: IndexSet, score: PeriodScore) -> Result<usize> {
    select_period_among(estimates, (0..estimates.num_periods).filter(|&p| !deselected.contains(p)), score)
        .ok_or_else(|| Error::PlanningExhausted("every period is deselected".into()))
}

pub fn select_period_among(
    estimates: &Estimates,
    candidates: impl IntoIterator<Item = usize>,
    score: PeriodScore,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for p in candidates {
        let v = period_value(estimates, p, score);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((p, v));
        }
    }
    best.map(|(p, _)| p)
}

/// Feasible station with the highest modified reward; lowest index on ties.
pub fn best_station(
    state: &PlanState,
    ctx: &PlanContext<'_>,
    candidates: &[usize],
    weights: RewardWeights,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &bs in candidates {
        let v = station_score(state, ctx, bs, weights);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((bs, v));
        }
    }
    best.map(|(bs, _)| bs)
}

/// Visits `bs` under the estimated model: access succeeds with probability
/// `P̂` and yields `L̂` seconds of CPU time. Returns `P̂` and whether it was
/// granted.
pub fn simulate_visit(state: &mut PlanState, ctx: &PlanContext<'_>, bs: usize, rng: &mut SimRng) -> (f64, bool) {
    state.fly_to(ctx, bs);
    let period = state.active_period(ctx);
    let p = ctx.estimates.spectrum(bs, period);
    let granted = rng.random::<f64>() < p;
    if granted {
        state.hover(ctx, ctx.estimates.cpu(bs, period));
    }
    state.mark_visited(bs, granted);
    (p, granted)
}

/// Greedy-in-modified-reward rollout with random deviations.
pub fn rollout(state: &mut PlanState, ctx: &PlanContext<'_>, config: &PlannerConfig, rng: &mut SimRng) {
    for _ in 0..config.rollout_horizon {
        if state.is_complete() {
            return;
        }
        if state.period.is_none() {
            let Some(p) = select_period_among(ctx.estimates, state.feasible_periods(ctx), config.period_score) else {
                return;
            };
            state.enter_period(ctx, p);
        }
        let candidates = state.feasible_stations(ctx);
        if candidates.is_empty() {
            return;
        }
        let bs = if rng.random_bool(config.rollout_epsilon) {
            candidates[rng.random_range(0..candidates.len())]
        } else {
            best_station(state, ctx, &candidates, config.weights()).expect("non-empty")
        };
        simulate_visit(state, ctx, bs, rng);
    }
}

/// The searching planner. With [`Backprop::LeafOnly`] it becomes the UCT
/// variant that credits only the leaf of each iteration.
#[derive(Debug, Clone)]
pub struct MctsPlanner {
    pub config: PlannerConfig,
    pub backprop: Backprop,
    tree: Option<Tree>,
}

impl MctsPlanner {
    pub fn new(config: PlannerConfig) -> Self {
        Self { config, backprop: Backprop::Full, tree: None }
    }

    pub fn without_backprop(config: PlannerConfig) -> Self {
        Self { config, backprop: Backprop::LeafOnly, tree: None }
    }

    /// Starts from an existing tree, e.g. one seeded with prior statistics.
    pub fn with_tree(config: PlannerConfig, tree: Tree) -> Self {
        Self { config, backprop: Backprop::Full, tree: Some(tree) }
    }

    pub fn tree(&self) -> Option<&Tree> {
        self.tree.as_ref()
    }

    fn root_kind(state: &PlanState) -> NodeKind {
        match state.period {
            None => NodeKind::Root,
            Some(p) => NodeKind::Period(p),
        }
    }

    /// Makes sure the tree is rooted where `state` stands.
    fn prepare_tree(&mut self, state: &PlanState) -> &mut Tree {
        let wants_periods = state.period.is_none();
        let valid = self.tree.as_ref().is_some_and(|t| {
            let kind = t.node(t.root()).kind;
            wants_periods == (kind == NodeKind::Root)
        });
        if !valid {
            self.tree = Some(Tree::new(Self::root_kind(state)));
        }
        self.tree.as_mut().expect("tree just ensured")
    }

    /// Actions available below a node reached in `state`.
    fn legal_actions(state: &PlanState, ctx: &PlanContext<'_>, config: &PlannerConfig) -> Vec<NodeKind> {
        if state.is_complete() {
            return Vec::new();
        }
        if state.period.is_none() {
            let mut periods = state.feasible_periods(ctx);
            // Expansion order: most promising first.
            periods.sort_by(|&a, &b| {
                let (va, vb) = (
                    period_value(ctx.estimates, a, config.period_score),
                    period_value(ctx.estimates, b, config.period_score),
                );
                vb.total_cmp(&va).then(a.cmp(&b))
            });
            periods.into_iter().map(NodeKind::Period).collect()
        } else {
            let mut stations: Vec<(usize, f64)> = state
                .feasible_stations(ctx)
                .into_iter()
                .map(|bs| (bs, station_score(state, ctx, bs, config.weights())))
                .collect();
            stations.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            stations.into_iter().map(|(bs, _)| NodeKind::Station(bs)).collect()
        }
    }

    /// Plays `action`; the grant probability and outcome when it visits a
    /// station.
    fn apply(state: &mut PlanState, ctx: &PlanContext<'_>, action: NodeKind, rng: &mut SimRng) -> Option<(f64, bool)> {
        match action {
            NodeKind::Period(p) => {
                state.enter_period(ctx, p);
                None
            }
            NodeKind::Station(bs) => Some(simulate_visit(state, ctx, bs, rng)),
            NodeKind::Root | NodeKind::Access(_) => None,
        }
    }

    /// One selection, expansion, rollout and backpropagation cycle.
    pub fn iterate(&mut self, root_state: &PlanState, ctx: &PlanContext<'_>, rng: &mut SimRng) {
        let config = self.config;
        let backprop = self.backprop;
        let tree = self.prepare_tree(root_state);
        let mut state = *root_state;
        let mut node = tree.root();
        let mut path = vec![node];
        loop {
            let legal = Self::legal_actions(&state, ctx, &config);
            if legal.is_empty() {
                break;
            }
            let untried = legal.iter().copied().find(|&a| tree.child_with(node, a).is_none());
            if let Some(action) = untried {
                let child = tree.add_child(node, action);
                if let Some((p, _)) = Self::apply(&mut state, ctx, action, rng) {
                    tree.set_grant_probability(child, p);
                }
                path.push(child);
                break;
            }
            let Some(child) = tree.select_child(node, config.eta_c, config.normalize_values, |k| legal.contains(&k))
            else {
                break;
            };
            let outcome = Self::apply(&mut state, ctx, tree.node(child).kind, rng);
            path.push(child);
            node = child;
            if let Some((p, granted)) = outcome {
                tree.set_grant_probability(node, p);
                let kind = NodeKind::Access(granted);
                match tree.child_with(node, kind) {
                    Some(next) => {
                        path.push(next);
                        node = next;
                    }
                    None => {
                        path.push(tree.add_child(node, kind));
                        break;
                    }
                }
            }
        }
        rollout(&mut state, ctx, &config, rng);
        let reward = terminal_reward(&state, ctx, config.lambda_for(ctx), config.reward);
        tree.backpropagate(&path, reward, backprop);
    }

    /// Reads the decision off the tree without searching: robust child at
    /// each level, uniform random among feasible actions where the tree has
    /// no information.
    pub fn decide(&self, state: &PlanState, ctx: &PlanContext<'_>, rng: &mut SimRng) -> Result<Decision> {
        let tree = self.tree.as_ref();
        let mut node = tree.map(|t| t.root());
        let mut state = *state;
        let period = match state.period {
            Some(p) => p,
            None => {
                let periods = state.feasible_periods(ctx);
                if periods.is_empty() {
                    return Err(Error::PlanningExhausted("no period leaves a feasible station".into()));
                }
                let picked = tree
                    .zip(node)
                    .and_then(|(t, n)| t.robust_child(n, |k| matches!(k, NodeKind::Period(p) if periods.contains(&p))));
                node = picked;
                let p = match picked.map(|id| tree.expect("picked from tree").node(id).kind) {
                    Some(NodeKind::Period(p)) => p,
                    _ => periods[rng.random_range(0..periods.len())],
                };
                state.enter_period(ctx, p);
                p
            }
        };
        let stations = state.feasible_stations(ctx);
        if stations.is_empty() {
            return Err(Error::PlanningExhausted("no feasible station".into()));
        }
        let picked = tree
            .zip(node)
            .and_then(|(t, n)| t.robust_child(n, |k| matches!(k, NodeKind::Station(b) if stations.contains(&b))))
            .map(|id| tree.expect("picked from tree").node(id).kind);
        let station = match picked {
            Some(NodeKind::Station(b)) => b,
            _ => stations[rng.random_range(0..stations.len())],
        };
        Ok(Decision { period, station })
    }

    pub fn deselect(&mut self, failure: Failure) {
        if let Some(tree) = self.tree.as_mut() {
            match failure {
                Failure::Station(bs) => tree.deselect(NodeKind::Station(bs)),
                Failure::Period(p) => tree.deselect(NodeKind::Period(p)),
            }
        }
    }
}

impl Planner for MctsPlanner {
    fn name(&self) -> &'static str {
        match self.backprop {
            Backprop::Full => "mcts",
            Backprop::LeafOnly => "uct",
        }
    }

    fn plan_next(&mut self, state: &PlanState, ctx: &PlanContext<'_>, rng: &mut SimRng) -> Result<Decision> {
        self.prepare_tree(state);
        for _ in 0..self.config.iterations {
            self.iterate(state, ctx, rng);
        }
        self.decide(state, ctx, rng)
    }

    fn advance(&mut self, decision: Decision, granted: bool) {
        let Some(tree) = self.tree.as_mut() else { return };
        let mut node = tree.root();
        if tree.node(node).kind == NodeKind::Root {
            match tree.child_with(node, NodeKind::Period(decision.period)) {
                Some(p) => node = p,
                None => {
                    self.tree = None;
                    return;
                }
            }
        }
        let next = tree
            .child_with(node, NodeKind::Station(decision.station))
            .and_then(|s| tree.child_with(s, NodeKind::Access(granted)));
        match next {
            Some(id) => tree.reroot(id),
            None => self.tree = None,
        }
    }

    fn handle_failure(&mut self, failure: Failure) {
        self.deselect(failure);
        if let Failure::Period(_) = failure {
            // The retained subtree was grown inside the lost period.
            self.tree = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn estimates_from(ratios: &[(u64, u64)]) -> Estimates {
        let spectrum = ratios.iter().map(|&(s, n)| s as f64 / n as f64).collect();
        Estimates::new(1, ratios.len(), spectrum, vec![1.0; ratios.len()]).unwrap()
    }

    #[test]
    fn period_choice_and_deselection() {
        let est = estimates_from(&[(27, 30), (15, 20), (2, 7)]);
        assert_eq!(select_period(&est, IndexSet::default(), PeriodScore::Max).unwrap(), 0);
        let mut gone = IndexSet::default();
        gone.insert(0);
        assert_eq!(select_period(&est, gone, PeriodScore::Max).unwrap(), 1);
        let flat = estimates_from(&[(1, 2), (1, 2), (1, 2)]);
        assert_eq!(select_period(&flat, IndexSet::default(), PeriodScore::Mean).unwrap(), 0);
        let all: IndexSet = vec![0, 1, 2].into();
        assert!(matches!(select_period(&est, all, PeriodScore::Max), Err(Error::PlanningExhausted(_))));
    }

    #[test]
    fn config_rejects_rewarding_energy() {
        assert!(PlannerConfig { c3: 0.5, ..Default::default() }.validate().is_err());
        assert!(PlannerConfig::default().validate().is_ok());
    }
}
