//! Action scores and terminal rewards.

use super::state::{PlanContext, PlanState};
use serde::{Deserialize, Serialize};

/// Weights of the modified reward over availability, CPU time and leg energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub c1: f64,
    pub c2: f64,
    /// Energy weight; non-positive so that costly legs score lower.
    pub c3: f64,
}

/// `c1·P̂ + c2·min(L̂ / work_scale, 1) + c3·(W / battery)`.
pub fn modified_reward(
    estimate_sp: f64,
    estimate_cpu: f64,
    leg_energy: f64,
    weights: RewardWeights,
    work_scale: f64,
    battery: f64,
) -> f64 {
    let cpu_term = if work_scale > 0.0 { (estimate_cpu / work_scale).min(1.0) } else { 1.0 };
    weights.c1 * estimate_sp + weights.c2 * cpu_term + weights.c3 * (leg_energy / battery)
}

/// Modified reward of visiting `bs` next from `state`.
pub fn station_score(state: &PlanState, ctx: &PlanContext<'_>, bs: usize, weights: RewardWeights) -> f64 {
    let leg = state.project_leg(ctx, bs);
    let period = ctx.world.grid.period_at(state.clock + leg.flight_time);
    modified_reward(
        ctx.estimates.spectrum(bs, period),
        ctx.estimates.cpu(bs, period),
        leg.energy(),
        weights,
        state.remaining_work.max(f64::MIN_POSITIVE),
        ctx.power.battery,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    /// Completion traded against energy at the configured weight, mapped to [0, 1].
    #[default]
    Objective,
    /// 1 when the task completes, else 0.
    Binary,
    /// Completion discounted by the energy spent on the way; failures score 0.
    Completion,
}

/// Reward of a finished simulation. Energy counts the whole mission plus the
/// flight to the goal, so rewards gathered from different planning roots
/// share one scale.
pub fn terminal_reward(end: &PlanState, ctx: &PlanContext<'_>, lambda: f64, mode: RewardMode) -> f64 {
    let eta = if end.is_complete() { 1.0 } else { 0.0 };
    let (_, goal_energy) = ctx.goal_leg(end.position);
    let spent = end.energy_used + goal_energy;
    let battery = ctx.power.battery;
    match mode {
        RewardMode::Binary => eta,
        RewardMode::Objective => ((lambda * eta + battery - spent) / (lambda + battery)).clamp(0.0, 1.0),
        RewardMode::Completion => eta * (1.0 - spent / (lambda + battery)).clamp(0.0, 1.0),
    }
}
