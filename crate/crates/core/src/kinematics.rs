//! Straight-line legs flown with a trapezoidal speed profile: accelerate at
//! the acceleration limit, cruise, then brake to a hover at the target.

use crate::geometry::Point3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub position: Point3,
    pub velocity: Point3,
}

/// Rest-to-rest travel time over `distance` with peak speed `speed` and
/// acceleration limit `accel`.
pub fn leg_duration(distance: f64, speed: f64, accel: f64) -> f64 {
    if distance <= 0.0 {
        return 0.0;
    }
    if distance >= speed * speed / accel {
        distance / speed + speed / accel
    } else {
        2.0 * (distance / accel).sqrt()
    }
}

/// Distance covered and speed reached `t` seconds into a leg.
fn profile_at(t: f64, distance: f64, speed: f64, accel: f64) -> (f64, f64) {
    let total = leg_duration(distance, speed, accel);
    if t >= total {
        return (distance, 0.0);
    }
    let peak = speed.min((distance * accel).sqrt());
    let ramp = peak / accel;
    let cruise_end = total - ramp;
    if t <= ramp {
        (0.5 * accel * t * t, accel * t)
    } else if t <= cruise_end {
        (0.5 * accel * ramp * ramp + peak * (t - ramp), peak)
    } else {
        let left = total - t;
        (distance - 0.5 * accel * left * left, accel * left)
    }
}

/// Samples a leg from `from` to `to` every `dt` seconds plus the endpoint.
/// Times are offset by `t0`. Returns the leg duration and the samples.
pub fn synthesize_leg(from: Point3, to: Point3, speed: f64, accel: f64, dt: f64, t0: f64) -> (f64, Vec<TrackSample>) {
    let delta = to - from;
    let distance = delta.norm();
    let duration = leg_duration(distance, speed, accel);
    if distance <= 0.0 {
        let rest = TrackSample { t: t0, position: from, velocity: Point3::ZERO };
        return (0.0, vec![rest]);
    }
    let dir = delta * (1.0 / distance);
    let steps = (duration / dt).ceil() as usize;
    let mut track = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = (k as f64 * dt).min(duration);
        let (s, v) = profile_at(t, distance, speed, accel);
        let position = if t >= duration { to } else { from + dir * s };
        track.push(TrackSample { t: t0 + t, position, velocity: dir * v });
        if t >= duration {
            break;
        }
    }
    (duration, track)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn zero_length_leg() {
        let p = Point3::new(1.0, 2.0, 3.0);
        let (d, track) = synthesize_leg(p, p, 30.0, 20.0, 0.5, 0.0);
        assert_eq!(d, 0.0);
        assert_eq!(track.len(), 1);
    }

    #[test]
    fn closed_form_durations() {
        // Trapezoid: cruise phase exists once d >= v^2/a = 45 m.
        let d = 3000.0;
        assert!(rel(leg_duration(d, 30.0, 20.0), d / 30.0 + 30.0 / 20.0) < 1e-9);
        // Triangle: never reaches the speed cap.
        let d = 20.0;
        assert!(rel(leg_duration(d, 30.0, 20.0), 2.0 * (d / 20.0_f64).sqrt()) < 1e-9);
        // Boundary: both forms agree.
        assert!(rel(leg_duration(45.0, 30.0, 20.0), 3.0) < 1e-12);
    }

    #[test]
    fn track_respects_limits_and_ends_at_target() {
        let from = Point3::new(0.0, 0.0, 100.0);
        let to = Point3::new(2500.0, -700.0, 100.0);
        let dt = 0.25;
        let (duration, track) = synthesize_leg(from, to, 30.0, 20.0, dt, 10.0);
        assert_eq!(track.first().unwrap().position, from);
        assert_eq!(track.last().unwrap().position, to);
        assert!(rel(track.last().unwrap().t - 10.0, duration) < 1e-12);
        for w in track.windows(2) {
            let step = w[1].t - w[0].t;
            assert!((w[1].position - w[0].position).norm() <= 30.0 * step * (1.0 + 1e-9) + 1e-9);
            assert!((w[1].velocity - w[0].velocity).norm() <= 20.0 * step * (1.0 + 1e-9) + 1e-9);
        }
    }
}
