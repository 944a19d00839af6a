//! After-the-fact audit of an episode against the mission constraints.

use super::log::EpisodeLog;
use super::metrics::compute_eta;
use super::TaskSpec;
use crate::energy::PowerModel;
use crate::scenario::World;

/// Relative slack for float accumulation.
const TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

fn within(value: f64, limit: f64) -> bool {
    value <= limit + TOL * limit.abs().max(1.0)
}

/// Every violated constraint, as a readable line; empty for a clean run.
pub fn violations(log: &EpisodeLog, world: &World, task: &TaskSpec, power: &PowerModel) -> Vec<String> {
    let mut out = Vec::new();
    let mut flag = |ok: bool, msg: String| {
        if !ok {
            out.push(msg);
        }
    };

    // Time budget and its decomposition into flight and hover.
    flag(within(log.elapsed, task.deadline), format!("time: elapsed {} > deadline {}", log.elapsed, task.deadline));
    let mut clock = 0.0;
    for d in &log.decisions {
        flag(close(d.t_start, clock), format!("time: decision {} starts at {} not {}", d.index, d.t_start, clock));
        let span = d.flight_time + d.hover_time;
        flag(
            close(d.t_end - d.t_start, span),
            format!("time: decision {} spans {} not {}", d.index, d.t_end - d.t_start, span),
        );
        clock = d.t_end;
    }
    flag(log.elapsed + TOL >= clock, format!("time: elapsed {} before last decision end {}", log.elapsed, clock));

    // Hover = offload + processing on every granted access.
    for d in &log.decisions {
        let service = d.hover_time - d.wait;
        if d.outcome.is_success() {
            let full = task.t_com + d.cpu_obtained;
            let ok = if d.outcome == super::AccessOutcome::Truncated {
                within(full, service + TOL)
            } else {
                close(service, full)
            };
            flag(ok, format!("hover: decision {} hovered {} for t_com + {}", d.index, service, d.cpu_obtained));
        } else {
            flag(service.abs() <= TOL, format!("hover: decision {} hovered {} without access", d.index, service));
        }
    }

    let eta = compute_eta(log);
    flag((0.0..=1.0).contains(&eta.binary) && (0.0..=1.0).contains(&eta.fraction), format!("completion: eta {eta:?}"));

    // Kinematics on the sampled track.
    for w in log.trajectory.windows(2) {
        let dt = w[1].t - w[0].t;
        flag(dt >= -TOL, format!("track time runs backwards at t={}", w[1].t));
        let step = w[1].position.distance(w[0].position);
        flag(within(step, power.v_max * dt), format!("speed: moved {step} m in {dt} s at t={}", w[1].t));
        let dv = (w[1].velocity - w[0].velocity).norm();
        flag(within(dv, power.a_max * dt), format!("acceleration: velocity jump {dv} in {dt} s at t={}", w[1].t));
        flag(within(w[1].velocity.norm(), power.v_max), format!("speed: speed {} at t={}", w[1].velocity.norm(), w[1].t));
    }

    // Start and end points.
    if let Some(first) = log.trajectory.first() {
        flag(first.position.distance(world.start) <= 1e-6, format!("endpoints: track starts at {:?}", first.position));
    }
    if log.concluded {
        if let Some(last) = log.trajectory.last() {
            flag(last.position.distance(world.goal) <= 1e-6, format!("endpoints: track ends at {:?}", last.position));
        }
    }

    // Energy budget and conservation.
    let total = log.energy_total();
    flag(within(total, power.battery), format!("battery: energy {total} > battery {}", power.battery));
    let summed: f64 = log.decisions.iter().map(|d| d.flight_energy + d.hover_energy).sum();
    let goal_leg = log.ledger.per_leg.get(log.decisions.len()).map_or(0.0, |l| l.joules);
    flag(close(summed + goal_leg, total), format!("ledger {total} differs from decision sum {}", summed + goal_leg));

    // Each station at most once.
    let mut seen = vec![false; world.num_stations()];
    for d in &log.decisions {
        flag(!seen[d.station], format!("station {} visited twice", d.station));
        seen[d.station] = true;
    }
    out
}
