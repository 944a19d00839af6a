//! Joint resource estimation and trajectory planning for an eVTOL swarm that
//! offloads computation to cognitive-radio base stations.
//!
//! The pipeline has three stages:
//!
//! 1. [`bandit`] pre-learns per-(station, period) spectrum availability with
//!    UCB or ε-greedy and keeps a regret ledger.
//! 2. [`mcts`] plans the offloading period and station visit order with a
//!    Monte Carlo tree search scored by a weighted reward over availability,
//!    CPU time and leg energy, and re-plans after access failures.
//! 3. [`sim`] executes missions against the ground-truth [`scenario`],
//!    synthesizes kinematically feasible tracks, enforces the time and
//!    battery budgets from [`energy`], and aggregates metrics for the
//!    planners in [`baselines`].

pub mod bandit;
pub mod baselines;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod mcts;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use geometry::Point3;
