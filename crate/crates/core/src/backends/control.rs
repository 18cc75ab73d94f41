use serde::{Deserialize, Serialize};

use super::{VehicleParams, VehicleState};
use crate::geometry::{Point2, Polyline};
#[allow(unused_imports)]
use crate::math::Float;
use crate::math::{clamp, wrap_angle};
use crate::planner::PlannedTrajectory;

/// Tracking-controller gains, shared by every vehicle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerGains {
    pub kp: f64,
    pub ki: f64,
    /// Bound on the integral term's contribution, m/s².
    pub integral_limit: f64,
    /// Lookahead distance per unit speed, s.
    pub lookahead_gain: f64,
    pub lookahead_min: f64,
    pub lookahead_max: f64,
    /// The acceleration feed-forward is read this far past the matched time
    /// to offset drivetrain lag, s.
    pub feedforward_preview: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kp: 1.5,
            ki: 0.3,
            integral_limit: 2.0,
            lookahead_gain: 0.25,
            lookahead_min: 2.0,
            lookahead_max: 12.0,
            feedforward_preview: 0.25,
        }
    }
}

impl ControllerGains {
    pub fn lookahead(&self, v: f64) -> f64 {
        clamp(self.lookahead_gain * v, self.lookahead_min, self.lookahead_max)
    }
}

/// Integrator of the longitudinal PI loop, one per agent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PiState {
    /// ∫(v_ref − v) dt, m.
    pub integral: f64,
}

/// Point at arclength `s` along `pts`, clamped to the last point.
fn point_at_arclength(pts: &[Point2], s: f64) -> Point2 {
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let len = w[0].distance(w[1]);
        if acc + len >= s && len > 0.0 {
            let u = ((s - acc) / len).max(0.0);
            return w[0] + (w[1] - w[0]) * u;
        }
        acc += len;
    }
    pts[pts.len() - 1]
}

/// Pure-pursuit steering target toward the trajectory point one lookahead
/// distance ahead of the vehicle's projection onto the trajectory.
pub fn pure_pursuit_lateral(
    state: &VehicleState,
    traj: &PlannedTrajectory,
    params: &VehicleParams,
    gains: &ControllerGains,
) -> f64 {
    let pts: alloc::vec::Vec<Point2> = traj.points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let Some(line) = Polyline::new(pts) else {
        return 0.0;
    };
    let pos = Point2::new(state.x, state.y);
    let ld = gains.lookahead(state.v);
    let s_ahead = line.project(pos).s.max(0.0) + ld;
    let target = point_at_arclength(line.points(), s_ahead);
    let to = target - pos;
    if to.norm() < 1e-9 {
        return 0.0;
    }
    let alpha = wrap_angle(to.y.atan2(to.x) - state.heading);
    let steer = (2.0 * params.wheelbase * alpha.sin() / ld).atan();
    clamp(steer, -params.delta_max, params.delta_max)
}

/// PI speed tracking around the matched time `state.t − traj.start_time`,
/// with feed-forward of the planned acceleration slightly ahead of it.
/// Updates the integrator.
pub fn pi_longitudinal(
    state: &VehicleState,
    traj: &PlannedTrajectory,
    gains: &ControllerGains,
    pi: &mut PiState,
    dt: f64,
) -> f64 {
    let tau = state.t - traj.start_time;
    let reference = traj.state_at(tau);
    let a_ff = traj.state_at(tau + gains.feedforward_preview).a;
    let err = reference.v - state.v;
    if gains.ki > 0.0 {
        let bound = gains.integral_limit / gains.ki;
        pi.integral = clamp(pi.integral + err * dt, -bound, bound);
    }
    a_ff + gains.kp * err + gains.ki * pi.integral
}
