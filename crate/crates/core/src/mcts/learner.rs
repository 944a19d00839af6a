//! Tree search used as an online learner on a layered Bernoulli task: each
//! round walks period then station, pulls the reached arm, and learns from
//! the outcome. Used to compare regret with and without backpropagation.

use super::tree::{Backprop, NodeKind, Tree};
use crate::bandit::RegretLedger;
use crate::error::{Error, Result};
use rand::Rng;

/// Arm means indexed `[period][station]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredTask {
    pub means: Vec<Vec<f64>>,
}

impl LayeredTask {
    pub fn new(means: Vec<Vec<f64>>) -> Result<Self> {
        let width = means.first().map_or(0, Vec::len);
        if width == 0 || means.iter().any(|row| row.len() != width) {
            return Err(Error::argument("layered task needs a non-empty rectangular mean table"));
        }
        Ok(Self { means })
    }

    pub fn best_mean(&self) -> f64 {
        self.means.iter().flatten().copied().fold(0.0, f64::max)
    }
}

pub struct TreeLearner {
    task: LayeredTask,
    tree: Tree,
    eta_c: f64,
    backprop: Backprop,
}

impl TreeLearner {
    pub fn new(task: LayeredTask, eta_c: f64, backprop: Backprop) -> Self {
        Self { task, tree: Tree::new(NodeKind::Root), eta_c, backprop }
    }

    /// One round; returns the pulled `(period, station)` and its reward.
    pub fn round<R: Rng + ?Sized>(&mut self, rng: &mut R) -> ((usize, usize), u8) {
        let periods = self.task.means.len();
        let stations = self.task.means[0].len();
        let mut path = vec![self.tree.root()];
        let mut node = self.tree.root();
        let mut choice = [None, None];
        for (depth, width) in [periods, stations].into_iter().enumerate() {
            let kind = |i| if depth == 0 { NodeKind::Period(i) } else { NodeKind::Station(i) };
            let untried = (0..width).find(|&i| self.tree.child_with(node, kind(i)).is_none());
            let expanded = untried.is_some();
            let child = match untried {
                Some(i) => self.tree.add_child(node, kind(i)),
                None => self.tree.select_child(node, self.eta_c, false, |_| true).expect("children exist"),
            };
            choice[depth] = Some(match self.tree.node(child).kind {
                NodeKind::Period(i) | NodeKind::Station(i) => i,
                NodeKind::Root | NodeKind::Access(_) => unreachable!("not a learner action"),
            });
            path.push(child);
            node = child;
            if expanded {
                break;
            }
        }
        let period = choice[0].expect("first level always chosen");
        // A fresh period node is evaluated by a random station rollout.
        let station = choice[1].unwrap_or_else(|| rng.random_range(0..stations));
        let reward = u8::from(rng.random::<f64>() < self.task.means[period][station]);
        self.tree.backpropagate(&path, f64::from(reward), self.backprop);
        ((period, station), reward)
    }

    /// Runs `rounds` rounds and returns the regret ledger.
    pub fn run<R: Rng + ?Sized>(&mut self, rounds: u64, rng: &mut R) -> RegretLedger {
        let mut ledger = RegretLedger::new(self.task.best_mean());
        for _ in 0..rounds {
            let ((p, s), _) = self.round(rng);
            ledger.record_regret(self.task.means[p][s]);
        }
        ledger
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn full_backprop_concentrates_on_best_arm() {
        let task = LayeredTask::new(vec![vec![0.9, 0.5, 0.1], vec![0.4, 0.3, 0.2]]).unwrap();
        let mut learner = TreeLearner::new(task, 1.0, Backprop::Full);
        let mut rng = stream(3, 5);
        let ledger = learner.run(5000, &mut rng);
        assert!(ledger.cumulative < 0.2 * 5000.0);
        let t = learner.tree();
        let p0 = t.child_with(t.root(), NodeKind::Period(0)).unwrap();
        let best = t.robust_child(p0, |_| true).unwrap();
        assert_eq!(t.node(best).kind, NodeKind::Station(0));
        assert_eq!(t.node(t.root()).visits, 5000);
    }

    #[test]
    fn rejects_ragged_tables() {
        assert!(LayeredTask::new(vec![vec![0.1], vec![0.2, 0.3]]).is_err());
        assert!(LayeredTask::new(vec![]).is_err());
    }
}
