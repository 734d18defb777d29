//! Domain types, the scenario file schema, and derived system quantities.
//!
//! A [`Scenario`] is read from JSON with [`parse_scenario`], which rejects
//! anything violating the invariants listed on each type. Power is in MW,
//! time in s, frequency in Hz, energy prices in £/MWh, no-load costs in £/h.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("commitment for `{name}` is {value}, outside [0, {max}]")]
    CommitmentOutOfRange { name: String, value: f64, max: u32 },
    #[error("commitment has {got} entries but the fleet has {expected} generator types")]
    CommitmentLength { got: usize, expected: usize },
    #[error("insecure: no post-fault inertia (H = {0} MW·s)")]
    NoPostFaultInertia(f64),
}

impl ModelError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Invalid { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyLimits {
    /// Nominal frequency (Hz).
    pub f0: f64,
    /// Maximum admissible rate of change of frequency (Hz/s).
    pub rocof_max: f64,
    /// Maximum admissible deviation at the nadir (Hz).
    pub delta_f_max: f64,
}

impl Default for FrequencyLimits {
    fn default() -> Self {
        FrequencyLimits { f0: 50.0, rocof_max: 1.0, delta_f_max: 0.8 }
    }
}

/// One frequency-response product: a linear ramp of length `delivery_time`
/// that starts `delay` seconds after the outage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrServiceSpec {
    pub name: String,
    pub delivery_time: f64,
    #[serde(default)]
    pub delay: f64,
}

impl FrServiceSpec {
    pub fn new(name: impl Into<String>, delivery_time: f64, delay: f64) -> Self {
        FrServiceSpec { name: name.into(), delivery_time, delay }
    }

    /// Time at which the ramp reaches its full amount.
    pub fn completion_time(&self) -> f64 {
        self.delay + self.delivery_time
    }
}

/// A class of identical thermal units.
///
/// `p_min` and `p_max` are per unit; `fr_capacity` is the aggregate FR cap
/// of the whole type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorType {
    pub name: String,
    pub unit_count: u32,
    pub p_min: f64,
    pub p_max: f64,
    #[serde(default)]
    pub fr_capacity: f64,
    #[serde(default)]
    pub fr_service: Option<String>,
    pub inertia_const: f64,
    pub marginal_cost: f64,
    #[serde(default)]
    pub no_load_cost: f64,
    #[serde(default)]
    pub is_largest_infeed: bool,
}

impl GeneratorType {
    /// Aggregate capacity with every unit online.
    pub fn capacity(&self) -> f64 {
        self.p_max * f64::from(self.unit_count)
    }

    /// Aggregate minimum stable generation with every unit online.
    pub fn min_output(&self) -> f64 {
        self.p_min * f64::from(self.unit_count)
    }

    /// FR cap of a single unit.
    pub fn fr_capacity_per_unit(&self) -> f64 {
        self.fr_capacity / f64::from(self.unit_count)
    }

    /// Kinetic-energy contribution of one online unit, H_g·P_g^max (MW·s).
    pub fn unit_inertia(&self) -> f64 {
        self.inertia_const * self.p_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    /// Upper bound on the largest infeed P_L^max (MW).
    pub p_loss_max: f64,
    /// Inertia constant H_L of the unit producing P_L (s).
    pub inertia_const_loss: f64,
    /// When set, P_L is a decision equal to the per-unit output of the
    /// generator type flagged `is_largest_infeed`; otherwise P_L = P_L^max.
    #[serde(default)]
    pub tracks_unit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "ED")]
    EconomicDispatch,
    #[serde(rename = "UC")]
    UnitCommitment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub limits: FrequencyLimits,
    pub fleet: Vec<GeneratorType>,
    pub services: Vec<FrServiceSpec>,
    pub demand: f64,
    #[serde(default)]
    pub res_available: f64,
    pub loss: LossSpec,
    pub mode: Mode,
}

impl Scenario {
    /// Index of the generator type driving the largest loss, if flagged.
    pub fn largest_infeed(&self) -> Option<usize> {
        self.fleet.iter().position(|g| g.is_largest_infeed)
    }

    pub fn service_index(&self, name: &str) -> Option<usize> {
        self.services.iter().position(|s| s.name == name)
    }

    /// Service each generator type delivers into, by index.
    pub fn service_of(&self, g: usize) -> Option<usize> {
        self.fleet[g].fr_service.as_deref().and_then(|n| self.service_index(n))
    }

    /// Commitment with every unit online.
    pub fn full_commitment(&self) -> Vec<f64> {
        self.fleet.iter().map(|g| f64::from(g.unit_count)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let non_negative = |v: f64| v.is_finite() && v >= 0.0;

        let l = &self.limits;
        for (field, v) in [("f0", l.f0), ("rocof_max", l.rocof_max), ("delta_f_max", l.delta_f_max)] {
            if !positive(v) {
                return Err(ModelError::invalid(format!("limits.{field}"), format!("{field} must be positive")));
            }
        }

        let mut names = HashSet::new();
        for (i, s) in self.services.iter().enumerate() {
            let path = format!("services[{i}]");
            if !positive(s.delivery_time) {
                return Err(ModelError::invalid(format!("{path}.delivery_time"), "delivery_time must be positive"));
            }
            if !non_negative(s.delay) {
                return Err(ModelError::invalid(format!("{path}.delay"), "delay must be non-negative"));
            }
            if !names.insert(s.name.as_str()) {
                return Err(ModelError::invalid(
                    format!("{path}.name"),
                    format!("duplicate service name `{}`", s.name),
                ));
            }
        }

        let mut gen_names = HashSet::new();
        for (i, g) in self.fleet.iter().enumerate() {
            let path = format!("fleet[{i}]");
            if !gen_names.insert(g.name.as_str()) {
                return Err(ModelError::invalid(
                    format!("{path}.name"),
                    format!("duplicate generator name `{}`", g.name),
                ));
            }
            if g.unit_count < 1 {
                return Err(ModelError::invalid(format!("{path}.unit_count"), "unit_count must be at least 1"));
            }
            if !non_negative(g.p_min) || !g.p_max.is_finite() || g.p_min > g.p_max {
                return Err(ModelError::invalid(format!("{path}.p_min"), "require 0 <= p_min <= p_max"));
            }
            if !non_negative(g.fr_capacity) {
                return Err(ModelError::invalid(format!("{path}.fr_capacity"), "fr_capacity must be non-negative"));
            }
            if !non_negative(g.inertia_const) {
                return Err(ModelError::invalid(format!("{path}.inertia_const"), "inertia_const must be non-negative"));
            }
            if !g.marginal_cost.is_finite() || !g.no_load_cost.is_finite() {
                return Err(ModelError::invalid(format!("{path}.marginal_cost"), "costs must be finite"));
            }
            if let Some(s) = &g.fr_service {
                if self.service_index(s).is_none() {
                    return Err(ModelError::invalid(format!("{path}.fr_service"), format!("unknown service `{s}`")));
                }
            }
        }

        if !non_negative(self.demand) {
            return Err(ModelError::invalid("demand", "demand must be non-negative"));
        }
        if !non_negative(self.res_available) {
            return Err(ModelError::invalid("res_available", "res_available must be non-negative"));
        }
        if !non_negative(self.loss.p_loss_max) {
            return Err(ModelError::invalid("loss.p_loss_max", "p_loss_max must be non-negative"));
        }
        if !non_negative(self.loss.inertia_const_loss) {
            return Err(ModelError::invalid("loss.inertia_const_loss", "inertia_const_loss must be non-negative"));
        }

        let flagged = self.fleet.iter().filter(|g| g.is_largest_infeed).count();
        if flagged > 1 {
            return Err(ModelError::invalid("fleet", "more than one generator type flagged is_largest_infeed"));
        }
        if self.loss.tracks_unit && flagged == 0 {
            return Err(ModelError::invalid(
                "loss.tracks_unit",
                "loss tracks a unit but no generator type is flagged is_largest_infeed",
            ));
        }
        Ok(())
    }
}

/// Post-fault operating point seen by the swing equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// System inertia H (MW·s).
    pub inertia: f64,
    /// Size of the lost infeed P_L (MW).
    pub loss_size: f64,
    /// FR amount R_i per service (MW).
    pub fr_amounts: Vec<f64>,
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de)
        .map_err(|e| ModelError::Schema { path: e.path().to_string(), message: e.inner().to_string() })?;
    scenario.validate()?;
    Ok(scenario)
}

/// H = Σ_g H_g·P_g^max·y_g − P_L^max·H_L, with y_g the number (or fraction)
/// of online units of each type.
pub fn system_inertia(commitment: &[f64], scenario: &Scenario) -> Result<f64, ModelError> {
    if commitment.len() != scenario.fleet.len() {
        return Err(ModelError::CommitmentLength { got: commitment.len(), expected: scenario.fleet.len() });
    }
    let mut h = 0.0;
    for (g, &y) in scenario.fleet.iter().zip(commitment) {
        if !(0.0..=f64::from(g.unit_count)).contains(&y) {
            return Err(ModelError::CommitmentOutOfRange { name: g.name.clone(), value: y, max: g.unit_count });
        }
        h += g.unit_inertia() * y;
    }
    Ok(h - scenario.loss.p_loss_max * scenario.loss.inertia_const_loss)
}

/// Like [`system_inertia`], but rejects commitments that leave no inertia
/// after the largest unit trips.
pub fn post_fault_inertia(commitment: &[f64], scenario: &Scenario) -> Result<f64, ModelError> {
    let h = system_inertia(commitment, scenario)?;
    if h <= 0.0 {
        return Err(ModelError::NoPostFaultInertia(h));
    }
    Ok(h)
}
