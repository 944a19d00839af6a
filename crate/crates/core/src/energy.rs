//! Hover and propulsion energy, the per-episode ledger, and the time/energy
//! budget check applied to every accepted step.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Analytic rotary-wing propulsion curve: blade-profile, induced and
/// parasite terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotaryWing {
    /// Blade-profile power in hover, W.
    pub blade_profile: f64,
    /// Induced power in hover, W.
    pub induced: f64,
    /// Rotor blade tip speed, m/s.
    pub tip_speed: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub induced_velocity: f64,
    pub fuselage_drag_ratio: f64,
    /// kg/m³.
    pub air_density: f64,
    pub rotor_solidity: f64,
    /// m².
    pub rotor_disc_area: f64,
}

impl Default for RotaryWing {
    fn default() -> Self {
        Self {
            blade_profile: 79.86,
            induced: 88.63,
            tip_speed: 120.0,
            induced_velocity: 4.03,
            fuselage_drag_ratio: 0.6,
            air_density: 1.225,
            rotor_solidity: 0.05,
            rotor_disc_area: 0.503,
        }
    }
}

impl RotaryWing {
    pub fn power(&self, v: f64) -> f64 {
        let v2 = v * v;
        let u2 = self.tip_speed * self.tip_speed;
        let v0_2 = self.induced_velocity * self.induced_velocity;
        let profile = self.blade_profile * (1.0 + 3.0 * v2 / u2);
        let induced = self.induced * ((1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2)).sqrt();
        let parasite =
            0.5 * self.fuselage_drag_ratio * self.air_density * self.rotor_solidity * self.rotor_disc_area * v2 * v;
        profile + induced + parasite
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FlightPower {
    /// Propulsion power fixed at its cruise value.
    Constant {
        watts: f64,
    },
    RotaryWing(RotaryWing),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    /// Hover power including communication, W.
    pub p_hover: f64,
    pub flight: FlightPower,
    /// m/s.
    pub cruise_speed: f64,
    /// m/s.
    pub v_max: f64,
    /// m/s².
    pub a_max: f64,
    /// Battery capacity, J.
    pub battery: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_hover: 500.0,
            flight: FlightPower::Constant { watts: 600.0 },
            cruise_speed: 30.0,
            v_max: 30.0,
            a_max: 20.0,
            battery: 2.0e6,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.p_hover) {
            return Err(Error::config("power.p_hover must be positive"));
        }
        if !(positive(self.v_max) && positive(self.a_max) && positive(self.battery)) {
            return Err(Error::config("power.v_max, power.a_max and power.battery must be positive"));
        }
        if !positive(self.cruise_speed) || self.cruise_speed > self.v_max {
            return Err(Error::config("power.cruise_speed must lie in (0, v_max]"));
        }
        match self.flight {
            FlightPower::Constant { watts } if !positive(watts) => {
                Err(Error::config("power.flight.watts must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Propulsion power at speed `v`, W.
    pub fn p_flight_at(&self, v: f64) -> f64 {
        match self.flight {
            FlightPower::Constant { watts } => watts,
            FlightPower::RotaryWing(curve) => curve.power(v),
        }
    }

    pub fn hover_energy(&self, duration: f64) -> Result<f64> {
        if duration.is_nan() || duration < 0.0 {
            return Err(Error::argument(format!("hover duration must be non-negative, got {duration}")));
        }
        Ok(self.p_hover * duration)
    }

    pub fn flight_energy(&self, distance: f64, speed: f64) -> Result<f64> {
        if !(speed > 0.0 && speed <= self.v_max) {
            return Err(Error::argument(format!("speed {speed} outside (0, {}]", self.v_max)));
        }
        if distance.is_nan() || distance < 0.0 {
            return Err(Error::argument(format!("distance must be non-negative, got {distance}")));
        }
        Ok(self.p_flight_at(speed) * (distance / speed))
    }

    /// Flight energy at cruise speed. Infallible for a validated model.
    pub fn cruise_energy(&self, distance: f64) -> f64 {
        self.p_flight_at(self.cruise_speed) * (distance.max(0.0) / self.cruise_speed)
    }

    /// Energy of one leg: cruise flight over `distance` plus hovering for the
    /// expected CPU-cycle duration.
    pub fn leg_energy(&self, distance: f64, expected_cpu: f64) -> Result<f64> {
        Ok(self.flight_energy(distance, self.cruise_speed)? + self.hover_energy(expected_cpu)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegEnergy {
    pub leg: usize,
    pub joules: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub hover_energy: f64,
    pub flight_energy: f64,
    pub per_leg: Vec<LegEnergy>,
}

impl EnergyLedger {
    pub fn total(&self) -> f64 {
        self.hover_energy + self.flight_energy
    }

    /// Books one leg and returns its index.
    pub fn record_leg(&mut self, flight: f64, hover: f64) -> usize {
        let leg = self.per_leg.len();
        self.flight_energy += flight;
        self.hover_energy += hover;
        self.per_leg.push(LegEnergy { leg, joules: flight + hover });
        leg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    /// Mission time budget `T`, s.
    pub deadline: f64,
    /// `B_max`, J.
    pub battery: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Binding {
    Time,
    Energy,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Feasible,
    Infeasible(Binding),
}

impl Verdict {
    pub fn is_feasible(self) -> bool {
        self == Verdict::Feasible
    }
}

/// Both budgets are inclusive: using exactly the battery or exactly the
/// deadline is still feasible.
pub fn check_totals(energy: f64, time_used: f64, limits: Limits) -> Verdict {
    match (time_used <= limits.deadline, energy <= limits.battery) {
        (true, true) => Verdict::Feasible,
        (false, true) => Verdict::Infeasible(Binding::Time),
        (true, false) => Verdict::Infeasible(Binding::Energy),
        (false, false) => Verdict::Infeasible(Binding::Both),
    }
}

pub fn check_budgets(ledger: &EnergyLedger, time_used: f64, limits: Limits) -> Verdict {
    check_totals(ledger.total(), time_used, limits)
}
