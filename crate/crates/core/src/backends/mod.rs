//! Execution backends behind one contract.
//!
//! The low-fidelity backend enforces the planned state; the high-fidelity
//! backend tracks the plan with a pure-pursuit + PI controller driving a
//! kinematic bicycle with actuator lag and friction-limited steering.

mod catalog;
mod control;
mod hifi;
mod lofi;

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::planner::{CartesianState, PlannedTrajectory};
use crate::scenario::{place_agent, AgentSpec, Lanelet};
use crate::Result;

pub use catalog::{vehicle_catalog, VehicleCatalog, VehicleParams};
pub use control::{pi_longitudinal, pure_pursuit_lateral, ControllerGains, PiState};
pub use hifi::{integrate_dynamics, saturated_steer, HifiBackend};
pub use lofi::{lofi_step, LofiBackend};

/// Executed vehicle state. `(x, y)` is the rear-axle reference point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Wrapped to (−π, π].
    pub heading: f64,
    pub v: f64,
    pub a: f64,
    /// Current front-wheel angle.
    pub steer: f64,
    /// Curvature of the path being driven.
    pub curvature: f64,
    pub t: f64,
}

impl VehicleState {
    pub fn cartesian(&self) -> CartesianState {
        CartesianState {
            x: self.x,
            y: self.y,
            heading: self.heading,
            v: self.v,
            a: self.a,
            curvature: self.curvature,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.x,
            self.y,
            self.heading,
            self.v,
            self.a,
            self.steer,
            self.curvature,
            self.t,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub steer_target: f64,
    pub accel_target: f64,
}

impl ControlCommand {
    pub fn clamped(self, params: &VehicleParams) -> Self {
        Self {
            steer_target: self.steer_target.clamp(-params.delta_max, params.delta_max),
            accel_target: self.accel_target.clamp(-params.a_brake_max, params.a_accel_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    Low,
    High,
}

impl Fidelity {
    pub fn as_str(self) -> &'static str {
        match self {
            Fidelity::Low => "low",
            Fidelity::High => "high",
        }
    }
}

impl core::fmt::Display for Fidelity {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Fidelity {
    type Err = String;
    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "low" | "lofi" => Ok(Fidelity::Low),
            "high" | "hifi" => Ok(Fidelity::High),
            other => Err(alloc::format!("unknown backend `{other}` (expected low or high)")),
        }
    }
}

/// Result of advancing one planning step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: VehicleState,
    /// First command of the step; high fidelity only.
    pub command: Option<ControlCommand>,
}

/// One backend instance drives one agent for one run.
pub trait Backend {
    fn fidelity(&self) -> Fidelity;

    /// Spawns the agent. Both fidelities share [`place_agent`].
    fn spawn(&mut self, lanelet: &Lanelet, agent: &AgentSpec) -> Result<VehicleState> {
        place_agent(lanelet, agent)
    }

    /// Advances `state` by exactly `dt_plan` along `traj`.
    fn step(&mut self, state: &VehicleState, traj: &PlannedTrajectory, dt_plan: f64) -> Result<StepOutcome>;
}
