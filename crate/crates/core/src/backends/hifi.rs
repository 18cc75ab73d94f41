use alloc::format;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::control::{pi_longitudinal, pure_pursuit_lateral, ControllerGains, PiState};
use super::{Backend, ControlCommand, Fidelity, StepOutcome, VehicleParams, VehicleState};
#[allow(unused_imports)]
use crate::math::Float;
use crate::math::{clamp, wrap_angle, GRAVITY};
use crate::planner::PlannedTrajectory;
use crate::{Error, Result};

/// Effective front-wheel angle after friction saturation: the magnitude is
/// reduced until the lateral acceleration `v²·tan|δ|/L` equals `μ·g`.
pub fn saturated_steer(steer: f64, v: f64, params: &VehicleParams) -> f64 {
    let limit = params.mu * GRAVITY;
    let v2 = v * v;
    if v2 * steer.abs().tan() / params.wheelbase <= limit {
        return steer;
    }
    steer.signum() * (limit * params.wheelbase / v2).atan()
}

/// One substep of actuator lag, saturation and semi-implicit kinematic
/// bicycle motion. `accel_noise` is added to the executed acceleration only.
pub fn integrate_dynamics(
    state: &VehicleState,
    cmd: ControlCommand,
    params: &VehicleParams,
    dt: f64,
    accel_noise: f64,
) -> VehicleState {
    let cmd = cmd.clamped(params);
    let relax = |x: f64, target: f64, tau: f64| x + (target - x) * (1.0 - (-dt / tau).exp());

    let max_change = params.steer_rate_max * dt;
    let change = clamp(
        relax(state.steer, cmd.steer_target, params.tau_steer) - state.steer,
        -max_change,
        max_change,
    );
    let steer = clamp(state.steer + change, -params.delta_max, params.delta_max);

    let mut a = clamp(
        relax(state.a, cmd.accel_target, params.tau_accel),
        -params.a_brake_max,
        params.a_accel_max,
    );
    let v = (state.v + (a + accel_noise) * dt).max(0.0);
    if v == 0.0 && a < 0.0 {
        // Brakes hold a stopped vehicle.
        a = 0.0;
    }
    let delta_eff = saturated_steer(steer, v, params);
    let curvature = delta_eff.tan() / params.wheelbase;
    let heading = state.heading + v * curvature * dt;
    let (sh, ch) = heading.sin_cos();
    VehicleState {
        x: state.x + v * ch * dt,
        y: state.y + v * sh * dt,
        heading: wrap_angle(heading),
        v,
        a,
        steer,
        curvature,
        t: state.t + dt,
    }
}

/// High-fidelity backend: a tracking controller drives the dynamics model at
/// `substeps` substeps per planning step.
#[derive(Debug, Clone)]
pub struct HifiBackend {
    params: VehicleParams,
    gains: ControllerGains,
    substeps: usize,
    pi: PiState,
    noise: Option<(ChaCha8Rng, f64)>,
}

impl HifiBackend {
    pub fn new(params: VehicleParams, gains: ControllerGains, substeps: usize) -> Result<Self> {
        params.validate()?;
        if substeps == 0 {
            return Err(Error::invalid("substeps", "must be >= 1"));
        }
        Ok(Self {
            params,
            gains,
            substeps,
            pi: PiState::default(),
            noise: None,
        })
    }

    /// Enables uniform acceleration noise in `[−amplitude, amplitude]`.
    pub fn with_accel_noise(mut self, seed: u64, amplitude: f64) -> Self {
        if amplitude > 0.0 {
            self.noise = Some((ChaCha8Rng::seed_from_u64(seed), amplitude));
        }
        self
    }

    pub fn params(&self) -> &VehicleParams {
        &self.params
    }

    pub fn pi_state(&self) -> PiState {
        self.pi
    }
}

impl Backend for HifiBackend {
    fn fidelity(&self) -> Fidelity {
        Fidelity::High
    }

    fn step(&mut self, state: &VehicleState, traj: &PlannedTrajectory, dt_plan: f64) -> Result<StepOutcome> {
        if traj.points.is_empty() {
            return Err(Error::Contract("empty trajectory".into()));
        }
        let dt = dt_plan / self.substeps as f64;
        let mut s = *state;
        let mut first = None;
        for _ in 0..self.substeps {
            let cmd = ControlCommand {
                steer_target: pure_pursuit_lateral(&s, traj, &self.params, &self.gains),
                accel_target: pi_longitudinal(&s, traj, &self.gains, &mut self.pi, dt),
            }
            .clamped(&self.params);
            first.get_or_insert(cmd);
            let noise = match &mut self.noise {
                Some((rng, amp)) => rng.gen_range(-*amp..=*amp),
                None => 0.0,
            };
            s = integrate_dynamics(&s, cmd, &self.params, dt, noise);
        }
        s.t = state.t + dt_plan;
        if !s.is_finite() {
            return Err(Error::Dynamics(format!("non-finite state at t = {:.3} s: {s:?}", s.t)));
        }
        Ok(StepOutcome {
            state: s,
            command: first,
        })
    }
}
