//! Pre-learning of spectrum availability. Every (station, period) pair is an
//! arm whose reward is 1 when an access finds a spectrum hole.

use crate::error::{check_index, Error, Result};
use crate::scenario::{sample_spectrum_available, World};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmStats {
    pub pulls: u64,
    pub successes: u64,
}

impl ArmStats {
    pub fn new(pulls: u64, successes: u64) -> Self {
        debug_assert!(successes <= pulls);
        Self { pulls, successes }
    }

    /// Empirical success rate; `None` until the arm has been pulled.
    pub fn mean(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.successes as f64 / self.pulls as f64)
    }
}

/// Arm statistics laid out station-major: arm `bs * num_periods + period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditState {
    pub num_stations: usize,
    pub num_periods: usize,
    pub arms: Vec<ArmStats>,
    pub total_rounds: u64,
}

impl BanditState {
    pub fn new(num_stations: usize, num_periods: usize) -> Self {
        Self { num_stations, num_periods, arms: vec![ArmStats::default(); num_stations * num_periods], total_rounds: 0 }
    }

    /// A single-period state over `arms`, for plain K-armed problems.
    pub fn from_arms(arms: Vec<ArmStats>) -> Self {
        let total_rounds = arms.iter().map(|a| a.pulls).sum();
        Self { num_stations: arms.len(), num_periods: 1, arms, total_rounds }
    }

    pub fn arm_index(&self, bs: usize, period: usize) -> usize {
        bs * self.num_periods + period
    }

    pub fn arm(&self, bs: usize, period: usize) -> &ArmStats {
        &self.arms[self.arm_index(bs, period)]
    }

    pub fn estimate(&self, bs: usize, period: usize) -> Option<f64> {
        self.arm(bs, period).mean()
    }

    /// `estimates[bs][period]`, `None` for arms never pulled.
    pub fn estimates(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.num_stations).map(|bs| (0..self.num_periods).map(|p| self.estimate(bs, p)).collect()).collect()
    }

    /// Arm ids of every station within `period`.
    pub fn period_arms(&self, period: usize) -> Vec<usize> {
        (0..self.num_stations).map(|bs| self.arm_index(bs, period)).collect()
    }
}

pub fn ucb_score(arm: &ArmStats, total: u64, eta_c: f64) -> f64 {
    match arm.mean() {
        None => f64::INFINITY,
        Some(mean) => mean + eta_c * (2.0 * (total.max(1) as f64).ln() / arm.pulls as f64).sqrt(),
    }
}

/// Index into `values` of the largest entry; the first one wins ties.
fn first_argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// UCB1 over every arm.
pub fn select_ucb(state: &BanditState, eta_c: f64) -> usize {
    let all: Vec<usize> = (0..state.arms.len()).collect();
    select_ucb_among(state, &all, eta_c)
}

/// UCB1 restricted to `candidates`; the round count is the candidates' total.
pub fn select_ucb_among(state: &BanditState, candidates: &[usize], eta_c: f64) -> usize {
    assert!(!candidates.is_empty(), "UCB needs at least one arm");
    let total: u64 = candidates.iter().map(|&a| state.arms[a].pulls).sum();
    let pick = first_argmax(candidates.iter().map(|&a| ucb_score(&state.arms[a], total, eta_c)));
    candidates[pick.expect("non-empty")]
}

pub fn select_eps_greedy<R: Rng + ?Sized>(state: &BanditState, epsilon: f64, rng: &mut R) -> Result<usize> {
    let all: Vec<usize> = (0..state.arms.len()).collect();
    select_eps_greedy_among(state, &all, epsilon, rng)
}

/// Explores uniformly with probability `epsilon`, otherwise exploits the
/// best empirical mean. Unpulled arms count as mean 0.
pub fn select_eps_greedy_among<R: Rng + ?Sized>(
    state: &BanditState,
    candidates: &[usize],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::argument(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    if candidates.is_empty() {
        return Err(Error::argument("epsilon-greedy needs at least one arm"));
    }
    if rng.random_bool(epsilon) {
        return Ok(candidates[rng.random_range(0..candidates.len())]);
    }
    let pick = first_argmax(candidates.iter().map(|&a| state.arms[a].mean().unwrap_or(0.0)));
    Ok(candidates[pick.expect("non-empty")])
}

pub fn update(state: &mut BanditState, arm: usize, reward: u8) -> Result<()> {
    check_index("arm", arm, state.arms.len())?;
    if reward > 1 {
        return Err(Error::argument(format!("bandit reward must be 0 or 1, got {reward}")));
    }
    let stats = &mut state.arms[arm];
    stats.pulls += 1;
    stats.successes += u64::from(reward);
    state.total_rounds += 1;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    /// `θ*`, the best arm's true mean.
    pub optimal_mean: f64,
    pub cumulative: f64,
    /// `(round, cumulative regret)`, starting with `(0, 0)`.
    pub curve: Vec<(u64, f64)>,
}

impl RegretLedger {
    pub fn new(optimal_mean: f64) -> Self {
        Self { optimal_mean, cumulative: 0.0, curve: vec![(0, 0.0)] }
    }

    pub fn rounds(&self) -> u64 {
        self.curve.last().map_or(0, |&(r, _)| r)
    }

    pub fn record_regret(&mut self, chosen_true_mean: f64) {
        self.record_gap(self.optimal_mean - chosen_true_mean);
    }

    /// Books an explicit per-round gap, for problems whose optimum moves
    /// between rounds.
    pub fn record_gap(&mut self, gap: f64) {
        self.cumulative += gap.max(0.0);
        let round = self.rounds() + 1;
        self.curve.push((round, self.cumulative));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum Policy {
    Ucb { eta_c: f64 },
    EpsGreedy { epsilon: f64 },
}

impl Policy {
    pub fn select<R: Rng + ?Sized>(&self, state: &BanditState, candidates: &[usize], rng: &mut R) -> Result<usize> {
        match *self {
            Policy::Ucb { eta_c } => Ok(select_ucb_among(state, candidates, eta_c)),
            Policy::EpsGreedy { epsilon } => select_eps_greedy_among(state, candidates, epsilon, rng),
        }
    }
}

/// Runs `episodes` access rounds against the ground truth. Periods form the
/// outer loop and receive equal shares of the rounds; within a period the
/// policy picks a station.
pub fn pretrain<R: Rng + ?Sized>(
    world: &World,
    policy: Policy,
    episodes: u64,
    rng: &mut R,
) -> Result<(BanditState, RegretLedger)> {
    pretrain_with(world, policy, episodes, rng, |_, _, _, _| {})
}

/// [`pretrain`] with a hook called as `observe(bs, period, success, rng)`
/// after every access.
pub fn pretrain_with<R, F>(
    world: &World,
    policy: Policy,
    episodes: u64,
    rng: &mut R,
    mut observe: F,
) -> Result<(BanditState, RegretLedger)>
where
    R: Rng + ?Sized,
    F: FnMut(usize, usize, bool, &mut R),
{
    if episodes == 0 {
        return Err(Error::argument("pretraining needs at least one episode"));
    }
    let t_d = world.num_periods();
    let n = world.num_stations();
    let mut state = BanditState::new(n, t_d);
    let mut ledger = RegretLedger::new(world.best_availability());
    for period in 0..t_d {
        let share = episodes / t_d as u64 + u64::from((period as u64) < episodes % t_d as u64);
        let candidates = state.period_arms(period);
        let best = (0..n).map(|bs| world.availability(bs, period)).fold(0.0, f64::max);
        for _ in 0..share {
            let arm = policy.select(&state, &candidates, rng)?;
            let bs = arm / t_d;
            let success = sample_spectrum_available(world, bs, period, rng)?;
            update(&mut state, arm, u8::from(success))?;
            ledger.record_gap(best - world.availability(bs, period));
            observe(bs, period, success, rng);
        }
    }
    Ok((state, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use crate::rng::stream;
    use crate::scenario::{BaseStation, CpuFamily, CpuProfile, Realization, SpectrumProfile, TimeGrid};
    use proptest::prelude::*;

    fn arms_world(means: &[f64]) -> World {
        let stations = means
            .iter()
            .enumerate()
            .map(|(id, &m)| BaseStation {
                id,
                position: Point3::new(id as f64, 0.0, 30.0),
                spectrum: SpectrumProfile::gaussian(vec![m], vec![0.0]),
                cpu: CpuProfile { family: CpuFamily::Exponential, mean: vec![1.0], dispersion: vec![0.0] },
            })
            .collect();
        World {
            stations,
            grid: TimeGrid::new(1, 3600.0, 0.0).unwrap(),
            start: Point3::new(0.0, 1.0, 120.0),
            goal: Point3::new(10.0, 1.0, 120.0),
            seed: 0,
            region: [100.0, 100.0],
            cruise_altitude: 120.0,
            realization: Realization::PerWorld,
            launch: 0.0,
        }
    }

    #[test]
    fn ucb_scores_follow_formula() {
        let state = BanditState::from_arms(vec![ArmStats::new(10, 9), ArmStats::new(10, 5)]);
        let bonus = (2.0 * 20f64.ln() / 10.0).sqrt();
        assert!((ucb_score(&state.arms[0], 20, 1.0) - (0.9 + bonus)).abs() < 1e-12);
        assert!((0.9 + bonus - 1.674).abs() < 1e-3);
        assert!((0.5 + bonus - 1.274).abs() < 1e-3);
        assert_eq!(select_ucb(&state, 1.0), 0);
    }

    #[test]
    fn ucb_tries_unpulled_first_and_breaks_ties_low() {
        let state = BanditState::from_arms(vec![ArmStats::new(5, 5), ArmStats::new(0, 0), ArmStats::new(3, 1)]);
        assert_eq!(select_ucb(&state, 1.0), 1);
        let same = BanditState::from_arms(vec![ArmStats::new(4, 2); 3]);
        assert_eq!(select_ucb(&same, 1.0), 0);
    }

    #[test]
    fn eps_greedy_extremes() {
        let state = BanditState::from_arms(vec![ArmStats::new(10, 2), ArmStats::new(10, 7)]);
        let mut rng = stream(1, 1);
        assert!((0..1000).all(|_| select_eps_greedy(&state, 0.0, &mut rng).unwrap() == 1));
        assert!(select_eps_greedy(&state, 1.5, &mut rng).is_err());
        assert!(select_eps_greedy(&state, -0.1, &mut rng).is_err());

        let state = BanditState::from_arms(vec![ArmStats::new(10, 2), ArmStats::new(10, 7), ArmStats::new(10, 1)]);
        let draws = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            counts[select_eps_greedy(&state, 1.0, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.01);
        }
        let mut exploit = 0;
        for _ in 0..draws {
            exploit += usize::from(select_eps_greedy(&state, 0.5, &mut rng).unwrap() == 1);
        }
        let expected = 1.0 - 0.5 * 2.0 / 3.0;
        assert!((exploit as f64 / draws as f64 - expected).abs() < 0.01);
    }

    #[test]
    fn update_tracks_means() {
        let mut state = BanditState::from_arms(vec![ArmStats::default(); 2]);
        update(&mut state, 0, 1).unwrap();
        assert_eq!(state.arms[0].mean(), Some(1.0));
        for r in [1, 0, 1, 0] {
            update(&mut state, 1, r).unwrap();
        }
        assert_eq!(state.arms[1].mean(), Some(0.5));
        assert!(matches!(update(&mut state, 0, 2), Err(Error::Argument(_))));
        assert!(matches!(update(&mut state, 2, 1), Err(Error::Bounds { .. })));
        assert_eq!(ArmStats::new(57, 44).mean(), Some(44.0 / 57.0));
    }

    #[test]
    fn regret_accumulates_gaps() {
        let mut ledger = RegretLedger::new(0.8);
        for _ in 0..10 {
            ledger.record_regret(0.6);
        }
        assert!((ledger.cumulative - 2.0).abs() < 1e-12);
        let mut perfect = RegretLedger::new(0.8);
        for _ in 0..100 {
            perfect.record_regret(0.8);
        }
        assert_eq!(perfect.cumulative, 0.0);
        assert_eq!(perfect.curve[0], (0, 0.0));
    }

    #[test]
    fn eps_greedy_regret_slope_matches_analysis() {
        // Two arms with gap 0.4: exploring picks the bad arm half the time.
        let world = arms_world(&[0.9, 0.5]);
        let mut rng = stream(4, 2);
        let (_, ledger) = pretrain(&world, Policy::EpsGreedy { epsilon: 0.5 }, 100_000, &mut rng).unwrap();
        let analytic = 0.5 * 0.5 * 0.4;
        let (r0, c0) = ledger.curve[10_000];
        let (r1, c1) = *ledger.curve.last().unwrap();
        let slope = (c1 - c0) / (r1 - r0) as f64;
        assert!((slope - analytic).abs() < 0.1 * analytic, "slope {slope}");
    }

    #[test]
    fn deterministic_world_gives_exact_estimates() {
        let world = arms_world(&[1.0, 0.0, 1.0]);
        let mut rng = stream(5, 2);
        let (state, _) = pretrain(&world, Policy::Ucb { eta_c: 1.0 }, 30, &mut rng).unwrap();
        for (bs, truth) in [(0, 1.0), (1, 0.0), (2, 1.0)] {
            if let Some(est) = state.estimate(bs, 0) {
                assert_eq!(est, truth);
            }
        }
        assert!(pretrain(&world, Policy::Ucb { eta_c: 1.0 }, 0, &mut rng).is_err());
    }

    #[test]
    fn heavily_pulled_arm_converges() {
        let world = arms_world(&[0.8]);
        let mut rng = stream(6, 2);
        let (state, _) = pretrain(&world, Policy::Ucb { eta_c: 1.0 }, 10_000, &mut rng).unwrap();
        let est = state.estimate(0, 0).unwrap();
        assert!((est - 0.8).abs() <= 3.0 * (0.8f64 * 0.2 / 10_000.0).sqrt());
    }

    #[test]
    fn ucb_never_starves() {
        // A worst arm 0.4 below the best gets about 2 ln t / 0.16 pulls.
        let world = arms_world(&[0.9, 0.8, 0.7, 0.6, 0.5]);
        let mut rng = stream(7, 2);
        let (state, _) = pretrain(&world, Policy::Ucb { eta_c: 1.0 }, 10_000, &mut rng).unwrap();
        let pulls: Vec<u64> = state.arms.iter().map(|a| a.pulls).collect();
        assert!(pulls.iter().all(|&p| p >= 50), "{pulls:?}");

        // With a wide gap the worst arm still keeps growing, only slower.
        let world = arms_world(&[0.9, 0.7, 0.5, 0.3, 0.1]);
        let min_pulls = |rounds| {
            let mut rng = stream(7, 2);
            let (state, _) = pretrain(&world, Policy::Ucb { eta_c: 1.0 }, rounds, &mut rng).unwrap();
            state.arms.iter().map(|a| a.pulls).min().unwrap()
        };
        assert!(min_pulls(1_000) < min_pulls(10_000));
        assert!(min_pulls(10_000) < min_pulls(100_000));
    }

    proptest! {
        #[test]
        fn counting_identity_and_monotone_regret(seed in 0u64..1000, rounds in 1u64..600, eps in 0.0f64..1.0) {
            let world = arms_world(&[0.7, 0.2, 0.55, 0.9]);
            let mut rng = stream(seed, 2);
            for policy in [Policy::Ucb { eta_c: 1.0 }, Policy::EpsGreedy { epsilon: eps }] {
                let (state, ledger) = pretrain(&world, policy, rounds, &mut rng).unwrap();
                prop_assert_eq!(state.total_rounds, state.arms.iter().map(|a| a.pulls).sum::<u64>());
                prop_assert_eq!(state.total_rounds, rounds);
                prop_assert!(state.arms.iter().all(|a| a.mean().is_none_or(|m| (0.0..=1.0).contains(&m))));
                prop_assert!(ledger.curve.windows(2).all(|w| w[1].1 >= w[0].1));
            }
        }

        #[test]
        fn exploit_choice_is_scale_invariant(pulls in proptest::collection::vec(1u64..50, 2..6), k in 0.1f64..1.0) {
            let arms: Vec<ArmStats> = pulls.iter().enumerate().map(|(i, &p)| ArmStats::new(p, (p * (i as u64 % 3)) / 3)).collect();
            let state = BanditState::from_arms(arms);
            let means: Vec<f64> = state.arms.iter().map(|a| a.mean().unwrap()).collect();
            let scaled = first_argmax(means.iter().map(|m| m * k));
            let mut rng = stream(0, 0);
            prop_assert_eq!(Some(select_eps_greedy(&state, 0.0, &mut rng).unwrap()), scaled);
        }
    }
}
