use alloc::format;

use super::{Backend, Fidelity, StepOutcome, VehicleState};
#[allow(unused_imports)]
use crate::math::Float;
use crate::planner::PlannedTrajectory;
use crate::{Error, Result};

/// Enforces the planned state one planning step ahead.
///
/// The trajectory must start at `state` and cover at least `dt_plan`. The
/// steering angle is carried over unchanged; [`LofiBackend`] fills it in.
pub fn lofi_step(state: &VehicleState, traj: &PlannedTrajectory, dt_plan: f64) -> Result<VehicleState> {
    let first = traj
        .points
        .first()
        .ok_or_else(|| Error::Contract("empty trajectory".into()))?;
    let gap = (first.x - state.x).hypot(first.y - state.y);
    if gap > 1e-9 {
        return Err(Error::Contract(format!(
            "trajectory starts {gap:.3e} m away from the vehicle"
        )));
    }
    if traj.duration() + 1e-12 < dt_plan {
        return Err(Error::Contract(format!(
            "trajectory covers {:.3} s, shorter than the {dt_plan} s step",
            traj.duration()
        )));
    }
    let p = traj.state_at(dt_plan);
    Ok(VehicleState {
        x: p.x,
        y: p.y,
        heading: p.heading,
        v: p.v,
        a: p.a,
        steer: state.steer,
        curvature: p.curvature,
        t: state.t + dt_plan,
    })
}

/// Low-fidelity backend: perfect control, exact state knowledge.
#[derive(Debug, Clone)]
pub struct LofiBackend {
    wheelbase: f64,
}

impl LofiBackend {
    /// `wheelbase` of the assumed model, used only to report a steering
    /// angle consistent with the enforced curvature.
    pub fn new(wheelbase: f64) -> Self {
        Self { wheelbase }
    }
}

impl Backend for LofiBackend {
    fn fidelity(&self) -> Fidelity {
        Fidelity::Low
    }

    fn step(&mut self, state: &VehicleState, traj: &PlannedTrajectory, dt_plan: f64) -> Result<StepOutcome> {
        let mut next = lofi_step(state, traj, dt_plan)?;
        next.steer = (next.curvature * self.wheelbase).atan();
        Ok(StepOutcome {
            state: next,
            command: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{predict_obstacles, CartesianState};

    #[test]
    fn constant_velocity_step_advances_one_metre() {
        let start = CartesianState {
            v: 10.0,
            ..CartesianState::default()
        };
        let traj = predict_obstacles(&[start], 2.0, 0.1).remove(0);
        let st = VehicleState {
            v: 10.0,
            ..VehicleState::default()
        };
        let next = lofi_step(&st, &traj, 0.1).unwrap();
        assert_eq!(next.x, 1.0);
        assert_eq!(next.t, 0.1);
        assert_eq!(next.x, traj.points[1].x);
    }

    #[test]
    fn contract_violations() {
        let traj = predict_obstacles(&[CartesianState::default()], 0.05, 0.1).remove(0);
        let st = VehicleState::default();
        assert!(matches!(lofi_step(&st, &traj, 0.1), Err(Error::Contract(_))));
        let traj = predict_obstacles(&[CartesianState::default()], 1.0, 0.1).remove(0);
        let moved = VehicleState {
            x: 1.0,
            ..VehicleState::default()
        };
        assert!(matches!(lofi_step(&moved, &traj, 0.1), Err(Error::Contract(_))));
    }
}
