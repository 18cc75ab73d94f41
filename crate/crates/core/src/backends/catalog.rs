use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::planner::Footprint;
use crate::{Error, Result};

/// Physical limits and actuator characteristics of one vehicle model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub model_id: String,
    pub wheelbase: f64,
    pub length: f64,
    pub width: f64,
    /// Informational only.
    pub mass: f64,
    pub delta_max: f64,
    pub steer_rate_max: f64,
    pub a_accel_max: f64,
    pub a_brake_max: f64,
    pub v_max: f64,
    /// First-order steering lag.
    pub tau_steer: f64,
    /// First-order drivetrain lag.
    pub tau_accel: f64,
    pub mu: f64,
}

impl VehicleParams {
    /// Touring car; also the model the planner assumes.
    pub fn touring() -> Self {
        Self {
            model_id: "touring".into(),
            wheelbase: 2.7,
            length: 4.7,
            width: 1.8,
            mass: 1500.0,
            delta_max: 0.61,
            steer_rate_max: 6.98,
            a_accel_max: 5.0,
            a_brake_max: 8.0,
            v_max: 50.8,
            tau_steer: 0.08,
            tau_accel: 0.25,
            mu: 1.0,
        }
    }

    pub fn offroad() -> Self {
        Self {
            model_id: "offroad".into(),
            wheelbase: 2.9,
            length: 4.9,
            width: 1.9,
            mass: 2300.0,
            delta_max: 0.55,
            steer_rate_max: 5.0,
            a_accel_max: 4.0,
            a_brake_max: 7.0,
            v_max: 40.0,
            tau_steer: 0.15,
            tau_accel: 0.40,
            mu: 0.9,
        }
    }

    pub fn citycar() -> Self {
        Self {
            model_id: "citycar".into(),
            wheelbase: 2.0,
            length: 3.4,
            width: 1.6,
            mass: 900.0,
            delta_max: 0.70,
            steer_rate_max: 4.5,
            a_accel_max: 2.0,
            a_brake_max: 6.5,
            v_max: 35.0,
            tau_steer: 0.20,
            tau_accel: 0.30,
            mu: 0.85,
        }
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            length: self.length,
            width: self.width,
            wheelbase: self.wheelbase,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("wheelbase", self.wheelbase),
            ("length", self.length),
            ("width", self.width),
            ("mass", self.mass),
            ("delta_max", self.delta_max),
            ("steer_rate_max", self.steer_rate_max),
            ("a_accel_max", self.a_accel_max),
            ("a_brake_max", self.a_brake_max),
            ("v_max", self.v_max),
            ("tau_steer", self.tau_steer),
            ("tau_accel", self.tau_accel),
            ("mu", self.mu),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, alloc::format!("{}: must be > 0", self.model_id)));
            }
        }
        if self.delta_max >= core::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid("delta_max", "must be below pi/2"));
        }
        Ok(())
    }
}

/// Lookup table of vehicle models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleCatalog {
    entries: Vec<VehicleParams>,
}

impl Default for VehicleCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl VehicleCatalog {
    pub fn builtin() -> Self {
        Self {
            entries: alloc::vec![
                VehicleParams::touring(),
                VehicleParams::offroad(),
                VehicleParams::citycar()
            ],
        }
    }

    pub fn entries(&self) -> &[VehicleParams] {
        &self.entries
    }

    pub fn get(&self, model_id: &str) -> Result<&VehicleParams> {
        self.entries
            .iter()
            .find(|p| p.model_id == model_id)
            .ok_or_else(|| Error::UnknownVehicle {
                requested: model_id.into(),
                valid: self.ids().join(", "),
            })
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|p| p.model_id.clone()).collect()
    }

    /// Replaces an entry with the same id or appends a new one.
    pub fn upsert(&mut self, params: VehicleParams) -> Result<()> {
        params.validate()?;
        match self.entries.iter_mut().find(|p| p.model_id == params.model_id) {
            Some(slot) => *slot = params,
            None => self.entries.push(params),
        }
        Ok(())
    }
}

/// Looks up a built-in model.
pub fn vehicle_catalog(model_id: &str) -> Result<VehicleParams> {
    VehicleCatalog::builtin().get(model_id).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_entries_are_valid() {
        for p in VehicleCatalog::builtin().entries() {
            p.validate().unwrap();
        }
    }

    #[test]
    fn touring_matches_planner_assumption() {
        let t = vehicle_catalog("touring").unwrap();
        assert_eq!(t.wheelbase, 2.7);
        let cfg = crate::planner::PlannerConfig::default();
        assert!((cfg.kappa_max - t.delta_max.tan() / t.wheelbase).abs() < 1e-15);
    }

    #[test]
    fn citycar_is_harder_to_track() {
        let c = vehicle_catalog("citycar").unwrap();
        let t = vehicle_catalog("touring").unwrap();
        let o = vehicle_catalog("offroad").unwrap();
        assert_eq!(c.wheelbase, 2.0);
        assert!(c.wheelbase < t.wheelbase && c.mu < t.mu && c.tau_steer > t.tau_steer);
        assert_eq!(c.mu, 0.85);
        assert_eq!(o.mu, 0.9);
        assert!(o.mass > t.mass && o.tau_steer > t.tau_steer && o.tau_steer < c.tau_steer);
    }

    #[test]
    fn unknown_model_lists_valid_ids() {
        let err = vehicle_catalog("bus").unwrap_err();
        let msg = alloc::format!("{err}");
        assert!(msg.contains("touring") && msg.contains("offroad") && msg.contains("citycar"));
    }
}
