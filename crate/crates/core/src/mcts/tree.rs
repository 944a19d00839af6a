//! Arena-backed search tree over period and station decisions.

use serde::{Deserialize, Serialize};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Root,
    Period(usize),
    Station(usize),
    /// Outcome of the access attempted at the parent station.
    Access(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub visits: u64,
    pub reward_sum: f64,
    pub deselected: bool,
    /// Estimated chance that the access at a station node is granted.
    pub grant_probability: Option<f64>,
    /// Backed-up value; `None` falls back to the mean.
    pub value: Option<f64>,
}

impl Node {
    fn new(kind: NodeKind, parent: Option<NodeId>) -> Self {
        Self {
            kind,
            parent,
            children: Vec::new(),
            visits: 0,
            reward_sum: 0.0,
            deselected: false,
            grant_probability: None,
            value: None,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        (self.visits > 0).then(|| self.reward_sum / self.visits as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Backprop {
    /// Every node on the path is credited.
    #[default]
    Full,
    /// Only the newly reached leaf is credited.
    LeafOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    root: NodeId,
}

/// Nested JSON view of a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSnapshot {
    pub kind: NodeKind,
    pub visits: u64,
    pub reward_sum: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub deselected: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeSnapshot>,
}

impl Tree {
    pub fn new(kind: NodeKind) -> Self {
        Self { nodes: vec![Node::new(kind, None)], root: 0 }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add_child(&mut self, parent: NodeId, kind: NodeKind) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node::new(kind, Some(parent)));
        self.nodes[parent].children.push(id);
        id
    }

    /// Adds a child that already carries statistics, e.g. prior knowledge.
    pub fn seed_child(&mut self, parent: NodeId, kind: NodeKind, visits: u64, reward_sum: f64) -> NodeId {
        let id = self.add_child(parent, kind);
        self.nodes[id].visits = visits;
        self.nodes[id].reward_sum = reward_sum;
        id
    }

    pub fn set_stats(&mut self, id: NodeId, visits: u64, reward_sum: f64) {
        self.nodes[id].visits = visits;
        self.nodes[id].reward_sum = reward_sum;
    }

    pub fn set_grant_probability(&mut self, id: NodeId, p: f64) {
        self.nodes[id].grant_probability = Some(p);
    }

    /// Value estimate of a node: its cached backed-up value, else its mean.
    pub fn value(&self, id: NodeId) -> Option<f64> {
        let node = &self.nodes[id];
        node.value.or_else(|| node.mean())
    }

    /// Backed-up value from the children. A station whose two access
    /// outcomes have both been sampled weights them by the grant probability
    /// instead of by how often each was drawn; other nodes mix their own
    /// leaf samples with the children's values by visits.
    fn backed_up(&self, id: NodeId) -> Option<f64> {
        let node = &self.nodes[id];
        if node.visits == 0 {
            return None;
        }
        if let Some(p) = node.grant_probability {
            let outcome = |g| self.child_with(id, NodeKind::Access(g)).and_then(|c| self.value(c));
            if let (Some(yes), Some(no)) = (outcome(true), outcome(false)) {
                return Some(p * yes + (1.0 - p) * no);
            }
        }
        let (mut direct, mut weighted) = (node.reward_sum, 0.0);
        for &c in &node.children {
            let child = &self.nodes[c];
            if let Some(v) = self.value(c) {
                direct -= child.reward_sum;
                weighted += child.visits as f64 * v;
            }
        }
        Some((direct + weighted) / node.visits as f64)
    }

    pub fn child_with(&self, parent: NodeId, kind: NodeKind) -> Option<NodeId> {
        self.nodes[parent].children.iter().copied().find(|&c| self.nodes[c].kind == kind)
    }

    /// UCB selection among the children for which `allowed` holds.
    /// Unvisited children come first; ties go to the earliest child. With
    /// `normalize`, means are rescaled to [0, 1] across the candidates.
    pub fn select_child(
        &self,
        parent: NodeId,
        eta_c: f64,
        normalize: bool,
        allowed: impl Fn(NodeKind) -> bool,
    ) -> Option<NodeId> {
        let candidates: Vec<NodeId> = self.nodes[parent]
            .children
            .iter()
            .copied()
            .filter(|&c| !self.nodes[c].deselected && allowed(self.nodes[c].kind))
            .collect();
        if let Some(&fresh) = candidates.iter().find(|&&c| self.nodes[c].visits == 0) {
            return Some(fresh);
        }
        let (lo, hi) = candidates
            .iter()
            .filter_map(|&c| self.value(c))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m), hi.max(m)));
        let scale = |m: f64| if normalize && hi > lo { (m - lo) / (hi - lo) } else { m };
        let log_parent = (self.nodes[parent].visits.max(1) as f64).ln();
        let mut best: Option<(NodeId, f64)> = None;
        for c in candidates {
            let node = &self.nodes[c];
            let score = scale(self.value(c).unwrap_or(0.0)) + eta_c * (2.0 * log_parent / node.visits as f64).sqrt();
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((c, score));
            }
        }
        best.map(|(c, _)| c)
    }

    /// Most-visited allowed child; ties by value, then earliest.
    pub fn robust_child(&self, parent: NodeId, allowed: impl Fn(NodeKind) -> bool) -> Option<NodeId> {
        let mut best: Option<(NodeId, u64, f64)> = None;
        for &c in &self.nodes[parent].children {
            let node = &self.nodes[c];
            if node.deselected || node.visits == 0 || !allowed(node.kind) {
                continue;
            }
            let mean = self.value(c).unwrap_or(0.0);
            let better = match best {
                None => true,
                Some((_, v, m)) => node.visits > v || (node.visits == v && mean > m),
            };
            if better {
                best = Some((c, node.visits, mean));
            }
        }
        best.map(|(c, _, _)| c)
    }

    pub fn backpropagate(&mut self, path: &[NodeId], reward: f64, mode: Backprop) {
        let credited = match mode {
            Backprop::Full => path,
            Backprop::LeafOnly => &path[path.len().saturating_sub(1)..],
        };
        for &id in credited {
            self.nodes[id].visits += 1;
            self.nodes[id].reward_sum += reward;
        }
        if mode == Backprop::Full {
            for &id in path.iter().rev() {
                self.nodes[id].value = self.backed_up(id);
            }
        }
    }

    /// Marks every node of `kind` as deselected.
    pub fn deselect(&mut self, kind: NodeKind) {
        for node in &mut self.nodes {
            if node.kind == kind {
                node.deselected = true;
            }
        }
    }

    /// Keeps only the subtree below `id`, which becomes the root.
    pub fn reroot(&mut self, id: NodeId) {
        let mut nodes = Vec::new();
        let mut stack = vec![(id, None)];
        while let Some((old, parent)) = stack.pop() {
            let new_id = nodes.len();
            let mut node = self.nodes[old].clone();
            node.parent = parent;
            let kids = std::mem::take(&mut node.children);
            nodes.push(node);
            if let Some(p) = parent {
                let p: usize = p;
                nodes[p].children.push(new_id);
            }
            // Reverse so children keep their order once popped.
            for &k in kids.iter().rev() {
                stack.push((k, Some(new_id)));
            }
        }
        self.nodes = nodes;
        self.root = 0;
    }

    pub fn snapshot(&self) -> NodeSnapshot {
        self.snapshot_from(self.root)
    }

    fn snapshot_from(&self, id: NodeId) -> NodeSnapshot {
        let node = &self.nodes[id];
        NodeSnapshot {
            kind: node.kind,
            visits: node.visits,
            reward_sum: node.reward_sum,
            deselected: node.deselected,
            children: node.children.iter().map(|&c| self.snapshot_from(c)).collect(),
        }
    }
}
