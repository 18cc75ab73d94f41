//! Frenet-frame sampling planner.
//!
//! Each cycle the planner enumerates lateral end offsets × horizons, builds a
//! quintic lateral profile and a velocity-keeping quartic longitudinal
//! profile per candidate, samples them at the planning step, converts to
//! Cartesian coordinates and rejects candidates that break kinematic limits,
//! leave the lane or hit a predicted obstacle. The cheapest survivor wins;
//! ties go to the earlier candidate (offsets outer, horizons inner).

mod collision;
mod frenet;
mod polynomial;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backends::VehicleParams;
#[allow(unused_imports)]
use crate::math::Float;
use crate::math::{clamp, wrap_angle};
use crate::{Error, Result};

pub use collision::{footprints_overlap, Footprint};
pub use frenet::{cartesian_to_frenet, frenet_to_cartesian, CartesianState, FrenetState, RefPoint, ReferencePath};
pub use polynomial::{solve_quartic_velocity_keeping, solve_quintic, Quartic, Quintic};

/// Residual allowed on polynomial boundary conditions.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub target_speed: f64,
    pub lateral_offsets: Vec<f64>,
    pub horizons: Vec<f64>,
    pub k_jerk: f64,
    pub k_time: f64,
    pub k_lat_dev: f64,
    pub k_speed_dev: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub kappa_max: f64,
    /// Lateral acceleration used to cap the target speed ahead of curves:
    /// `v ≤ sqrt(curve_accel / |κ|)` for the sharpest reference curvature
    /// within one longest horizon. `None` disables the cap.
    pub curve_accel: Option<f64>,
    /// Lateral deceleration assumed when a vehicle already drifting outward
    /// is brought back; sets the excursion the lane check tolerates.
    pub lateral_recovery_accel: f64,
    /// Outline of the vehicle the planner believes it drives.
    pub footprint: Footprint,
    /// Deceleration of the emergency-brake fallback.
    pub brake_decel: f64,
    /// Below this speed the planner runs in launch mode.
    pub launch_speed: f64,
}

impl PlannerConfig {
    /// Defaults with limits taken from the assumed vehicle model.
    pub fn for_vehicle(params: &VehicleParams) -> Self {
        Self {
            target_speed: 10.0,
            lateral_offsets: alloc::vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            horizons: alloc::vec![2.0, 3.0, 4.0],
            k_jerk: 0.1,
            k_time: 1.0,
            k_lat_dev: 5.0,
            k_speed_dev: 0.5,
            v_max: 50.8,
            a_max: 8.0,
            kappa_max: params.delta_max.tan() / params.wheelbase,
            curve_accel: None,
            lateral_recovery_accel: 2.0,
            footprint: params.footprint(),
            brake_decel: params.a_brake_max,
            launch_speed: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("k_jerk", self.k_jerk),
            ("k_time", self.k_time),
            ("k_lat_dev", self.k_lat_dev),
            ("k_speed_dev", self.k_speed_dev),
        ];
        for (name, w) in weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(name, "weights must be >= 0"));
            }
        }
        if self.lateral_offsets.is_empty() || self.lateral_offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::invalid("lateral_offsets", "need at least one finite offset"));
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::invalid("horizons", "need at least one positive horizon"));
        }
        for (name, v) in [
            ("kappa_max", self.kappa_max),
            ("a_max", self.a_max),
            ("v_max", self.v_max),
            ("brake_decel", self.brake_decel),
            ("lateral_recovery_accel", self.lateral_recovery_accel),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be > 0"));
            }
        }
        if let Some(a) = self.curve_accel {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::invalid("curve_accel", "must be > 0"));
            }
        }
        if !(self.target_speed.is_finite() && self.target_speed >= 0.0) {
            return Err(Error::invalid("target_speed", "must be >= 0"));
        }
        Ok(())
    }

    pub fn longest_horizon(&self) -> f64 {
        self.horizons.iter().fold(0.0, |m, h| m.max(*h))
    }

    /// Speed the longitudinal candidates aim for from arclength `s` at
    /// speed `s_dot`.
    pub fn desired_speed(&self, path: &ReferencePath, s: f64, s_dot: f64) -> f64 {
        let Some(accel) = self.curve_accel else {
            return self.target_speed;
        };
        let reach = s + s_dot.max(self.target_speed) * self.longest_horizon();
        let kappa = path
            .centerline()
            .samples()
            .iter()
            .filter(|c| c.s >= s && c.s <= reach)
            .fold(path.lookup(s).0.curvature.abs(), |m, c| m.max(c.curvature.abs()));
        if kappa <= 0.0 {
            return self.target_speed;
        }
        self.target_speed.min((accel / kappa).sqrt())
    }
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self::for_vehicle(&VehicleParams::touring())
    }
}

/// One time-stamped planned state. `t` is relative to the start of the
/// trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub a: f64,
    pub curvature: f64,
}

impl TrajectoryPoint {
    pub fn from_cartesian(t: f64, c: &CartesianState) -> Self {
        Self {
            t,
            x: c.x,
            y: c.y,
            heading: c.heading,
            v: c.v,
            a: c.a,
            curvature: c.curvature,
        }
    }

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
}

/// States sampled every planning step from `t = 0` to the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrajectory {
    /// Absolute simulation time of the first point.
    pub start_time: f64,
    pub points: Vec<TrajectoryPoint>,
}

impl PlannedTrajectory {
    pub fn duration(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.t)
    }

    /// State at relative time `tau`, linearly interpolated and clamped to the
    /// trajectory's time span.
    pub fn state_at(&self, tau: f64) -> TrajectoryPoint {
        let pts = &self.points;
        if tau <= pts[0].t {
            return pts[0];
        }
        let last = pts[pts.len() - 1];
        if tau >= last.t {
            return last;
        }
        let i = pts.partition_point(|p| p.t <= tau) - 1;
        let (a, b) = (&pts[i], &pts[i + 1]);
        if tau == a.t {
            return *a;
        }
        let u = (tau - a.t) / (b.t - a.t);
        let lerp = |x: f64, y: f64| x + u * (y - x);
        TrajectoryPoint {
            t: tau,
            x: lerp(a.x, b.x),
            y: lerp(a.y, b.y),
            heading: wrap_angle(a.heading + u * wrap_angle(b.heading - a.heading)),
            v: lerp(a.v, b.v),
            a: lerp(a.a, b.a),
            curvature: lerp(a.curvature, b.curvature),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rejection {
    /// Frenet → Cartesian conversion failed.
    Geometry,
    NegativeSpeed,
    SpeedLimit,
    AccelerationLimit,
    CurvatureLimit,
    LaneDeparture,
    Collision,
    BoundaryResidual,
}

/// One sampled candidate, kept for inspection even when rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTrajectory {
    pub target_offset: f64,
    pub horizon: f64,
    pub lateral: Quintic,
    pub longitudinal: Quartic,
    pub cost: f64,
    pub rejection: Option<Rejection>,
    pub boundary_residual: f64,
    pub points: Vec<TrajectoryPoint>,
    pub frenet: Vec<FrenetState>,
}

impl CandidateTrajectory {
    pub fn feasible(&self) -> bool {
        self.rejection.is_none()
    }
}

/// Largest |d| a vehicle at `fs` cannot avoid reaching.
fn committed_excursion(fs: &FrenetState, cfg: &PlannerConfig) -> f64 {
    let outward = (fs.d_dot * fs.d.signum()).max(0.0);
    fs.d.abs() + outward * outward / (2.0 * cfg.lateral_recovery_accel)
}

/// Sampling planner bound to one parameter set and planning step.
#[derive(Debug, Clone)]
pub struct Planner {
    config: PlannerConfig,
    dt: f64,
}

impl Planner {
    pub fn new(config: PlannerConfig, dt: f64) -> Result<Self> {
        config.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt_plan", "must be > 0"));
        }
        Ok(Self { config, dt })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Builds, samples and checks every candidate. In launch mode the lateral
    /// offset is held and only the horizons are enumerated.
    pub fn evaluate(
        &self,
        path: &ReferencePath,
        fs: &FrenetState,
        obstacles: &[PlannedTrajectory],
        launch: bool,
    ) -> Vec<CandidateTrajectory> {
        let cfg = &self.config;
        let v_des = cfg.desired_speed(path, fs.s, fs.s_dot);
        let mut out = Vec::new();
        let offsets: Vec<Option<f64>> = if launch {
            alloc::vec![None]
        } else {
            cfg.lateral_offsets.iter().map(|o| Some(*o)).collect()
        };
        for offset in offsets {
            for &horizon in &cfg.horizons {
                out.push(self.candidate(path, fs, offset, horizon, v_des, obstacles));
            }
        }
        out
    }

    fn candidate(
        &self,
        path: &ReferencePath,
        fs: &FrenetState,
        offset: Option<f64>,
        horizon: f64,
        v_des: f64,
        obstacles: &[PlannedTrajectory],
    ) -> CandidateTrajectory {
        let cfg = &self.config;
        let (lateral, target_offset, lat_residual) = match offset {
            Some(d_t) => {
                let q = solve_quintic(fs.d, fs.d_dot, fs.d_ddot, d_t, horizon).expect("horizons validated positive");
                let r = q.boundary_residual(fs.d, fs.d_dot, fs.d_ddot, d_t, horizon);
                (q, d_t, r)
            }
            None => {
                let mut coeffs = [0.0; 6];
                coeffs[0] = fs.d;
                (Quintic { coeffs }, fs.d, 0.0)
            }
        };
        let longitudinal = solve_quartic_velocity_keeping(fs.s, fs.s_dot, fs.s_ddot, v_des, horizon)
            .expect("horizons validated positive");
        let lon_residual = longitudinal.boundary_residual(fs.s, fs.s_dot, fs.s_ddot, v_des, horizon);
        let boundary_residual = lat_residual.max(lon_residual);

        let cost = cfg.k_jerk * (lateral.jerk_cost(horizon) + longitudinal.jerk_cost(horizon))
            + cfg.k_time * horizon
            + cfg.k_lat_dev * lateral.value(horizon).powi(2)
            + cfg.k_speed_dev * (longitudinal.velocity(horizon) - v_des).powi(2);

        let steps = (horizon / self.dt + 1e-9).floor() as usize;
        let lane_bound = (path.lane_width() / 2.0 - cfg.footprint.width / 2.0).max(committed_excursion(fs, cfg));
        let mut rejection = (boundary_residual > BOUNDARY_TOLERANCE).then_some(Rejection::BoundaryResidual);
        let mut points = Vec::with_capacity(steps + 1);
        let mut frenet = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = k as f64 * self.dt;
            let f = FrenetState {
                s: longitudinal.value(t),
                s_dot: longitudinal.velocity(t),
                s_ddot: longitudinal.acceleration(t),
                d: lateral.value(t),
                d_dot: lateral.velocity(t),
                d_ddot: lateral.acceleration(t),
            };
            frenet.push(f);
            let c = match frenet_to_cartesian(path, &f) {
                Ok(c) => c,
                Err(_) => {
                    rejection.get_or_insert(Rejection::Geometry);
                    continue;
                }
            };
            let point = TrajectoryPoint::from_cartesian(t, &c);
            if rejection.is_none() {
                rejection = self.check_point(&point, &f, lane_bound, k, obstacles);
            }
            points.push(point);
        }
        CandidateTrajectory {
            target_offset,
            horizon,
            lateral,
            longitudinal,
            cost,
            rejection,
            boundary_residual,
            points,
            frenet,
        }
    }

    fn check_point(
        &self,
        p: &TrajectoryPoint,
        f: &FrenetState,
        lane_bound: f64,
        k: usize,
        obstacles: &[PlannedTrajectory],
    ) -> Option<Rejection> {
        let cfg = &self.config;
        const EPS: f64 = 1e-9;
        if f.s_dot < -EPS || !p.v.is_finite() {
            return Some(Rejection::NegativeSpeed);
        }
        if p.v > cfg.v_max + EPS {
            return Some(Rejection::SpeedLimit);
        }
        if !(p.a.abs() <= cfg.a_max + EPS) {
            return Some(Rejection::AccelerationLimit);
        }
        if !(p.curvature.abs() <= cfg.kappa_max + EPS) {
            return Some(Rejection::CurvatureLimit);
        }
        if f.d.abs() > lane_bound + EPS {
            return Some(Rejection::LaneDeparture);
        }
        for obs in obstacles {
            if let Some(o) = obs.points.get(k) {
                if footprints_overlap(
                    &cfg.footprint,
                    (p.x, p.y, p.heading),
                    &cfg.footprint,
                    (o.x, o.y, o.heading),
                ) {
                    return Some(Rejection::Collision);
                }
            }
        }
        None
    }

    /// Index of the cheapest feasible candidate, first one on ties.
    pub fn select(candidates: &[CandidateTrajectory]) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, c) in candidates.iter().enumerate() {
            if !c.feasible() {
                continue;
            }
            match best {
                Some(b) if candidates[b].cost <= c.cost => {}
                _ => best = Some(i),
            }
        }
        best
    }

    /// Plans from a Frenet state. The returned trajectory has `start_time`
    /// zero; fails with [`Error::FallbackRequired`] when nothing is feasible.
    pub fn plan(
        &self,
        path: &ReferencePath,
        fs: &FrenetState,
        obstacles: &[PlannedTrajectory],
        launch: bool,
    ) -> Result<PlannedTrajectory> {
        if !fs.is_finite() {
            return Err(Error::invalid("frenet_state", "must be finite"));
        }
        let mut candidates = self.evaluate(path, fs, obstacles, launch);
        let best = Self::select(&candidates).ok_or(Error::FallbackRequired)?;
        Ok(PlannedTrajectory {
            start_time: 0.0,
            points: core::mem::take(&mut candidates[best].points),
        })
    }

    /// Plans from a Cartesian state.
    ///
    /// The state's acceleration and curvature are first clamped into the
    /// planner's limits, so a vehicle that momentarily exceeds what the
    /// planner's model allows still gets a plan. The first point of the
    /// result is pinned to the (clamped) input state.
    pub fn plan_from_state(
        &self,
        path: &ReferencePath,
        state: &CartesianState,
        obstacles: &[PlannedTrajectory],
        launch: bool,
    ) -> Result<PlannedTrajectory> {
        let cfg = &self.config;
        let start = CartesianState {
            a: clamp(state.a, -cfg.a_max, cfg.a_max),
            curvature: clamp(state.curvature, -cfg.kappa_max, cfg.kappa_max),
            ..*state
        };
        let fs = cartesian_to_frenet(path, &start)?;
        let mut traj = self.plan(path, &fs, obstacles, launch)?;
        traj.points[0] = TrajectoryPoint::from_cartesian(0.0, &start);
        Ok(traj)
    }

    /// Constant-velocity, heading-hold predictions of other vehicles over the
    /// longest horizon, in input order.
    pub fn predict_obstacles(&self, others: &[CartesianState]) -> Vec<PlannedTrajectory> {
        predict_obstacles(others, self.config.longest_horizon(), self.dt)
    }

    /// Straight-line stop along the current heading at `brake_decel`.
    pub fn emergency_brake(&self, state: &CartesianState) -> PlannedTrajectory {
        emergency_brake(state, self.config.brake_decel, self.config.longest_horizon(), self.dt)
    }
}

pub fn predict_obstacles(others: &[CartesianState], horizon: f64, dt: f64) -> Vec<PlannedTrajectory> {
    let steps = (horizon / dt + 1e-9).floor() as usize;
    others
        .iter()
        .map(|o| {
            let (sh, ch) = o.heading.sin_cos();
            let points = (0..=steps)
                .map(|k| {
                    let t = k as f64 * dt;
                    TrajectoryPoint {
                        t,
                        x: o.x + o.v * ch * t,
                        y: o.y + o.v * sh * t,
                        heading: o.heading,
                        v: o.v,
                        a: 0.0,
                        curvature: 0.0,
                    }
                })
                .collect();
            PlannedTrajectory {
                start_time: 0.0,
                points,
            }
        })
        .collect()
}

pub fn emergency_brake(state: &CartesianState, decel: f64, horizon: f64, dt: f64) -> PlannedTrajectory {
    let steps = (horizon / dt + 1e-9).floor() as usize;
    let v0 = state.v.max(0.0);
    let t_stop = v0 / decel;
    let (sh, ch) = state.heading.sin_cos();
    let mut points = Vec::with_capacity(steps + 1);
    points.push(TrajectoryPoint::from_cartesian(0.0, state));
    for k in 1..=steps {
        let t = k as f64 * dt;
        let (dist, v, a) = if t < t_stop {
            (v0 * t - 0.5 * decel * t * t, v0 - decel * t, -decel)
        } else {
            (v0 * t_stop - 0.5 * decel * t_stop * t_stop, 0.0, 0.0)
        };
        points.push(TrajectoryPoint {
            t,
            x: state.x + dist * ch,
            y: state.y + dist * sh,
            heading: state.heading,
            v,
            a,
            curvature: 0.0,
        });
    }
    PlannedTrajectory {
        start_time: 0.0,
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_turn_road, RoadSpec};

    fn straight_path() -> ReferencePath {
        ReferencePath::from_lanelet(
            &build_turn_road(&RoadSpec {
                entry_length: 200.0,
                exit_length: 0.0,
                ..RoadSpec::default()
            })
            .unwrap(),
        )
    }

    #[test]
    fn cruise_on_centerline_keeps_zero_offset() {
        let planner = Planner::new(PlannerConfig::default(), 0.1).unwrap();
        let fs = FrenetState {
            s: 10.0,
            s_dot: 10.0,
            ..FrenetState::default()
        };
        let cands = planner.evaluate(&straight_path(), &fs, &[], false);
        let best = Planner::select(&cands).unwrap();
        assert_eq!(cands[best].target_offset, 0.0);
        // Offsets ±1 leave the lane for the default footprint.
        assert!(cands
            .iter()
            .filter(|c| c.target_offset.abs() == 1.0)
            .all(|c| c.rejection == Some(Rejection::LaneDeparture)));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = PlannerConfig::default();
        cfg.horizons.clear();
        assert!(Planner::new(cfg, 0.1).is_err());
        let mut cfg = PlannerConfig::default();
        cfg.k_time = -1.0;
        assert!(Planner::new(cfg, 0.1).is_err());
        let mut cfg = PlannerConfig::default();
        cfg.kappa_max = 0.0;
        assert!(Planner::new(cfg, 0.1).is_err());
    }

    #[test]
    fn predictions() {
        let still = CartesianState::default();
        let moving = CartesianState {
            v: 5.0,
            ..CartesianState::default()
        };
        let p = predict_obstacles(&[still, moving], 4.0, 0.1);
        assert_eq!(p.len(), 2);
        assert!(p[0].points.iter().all(|q| q.x == 0.0 && q.y == 0.0));
        for q in &p[1].points {
            assert!((q.x - 5.0 * q.t).abs() < 1e-12);
        }
        assert_eq!(p[1].points.len(), 41);
    }

    #[test]
    fn emergency_brake_stops() {
        let st = CartesianState {
            v: 8.0,
            ..CartesianState::default()
        };
        let tr = emergency_brake(&st, 8.0, 4.0, 0.1);
        assert_eq!(tr.points[0].v, 8.0);
        let last = tr.points.last().unwrap();
        assert_eq!(last.v, 0.0);
        assert!((last.x - 4.0).abs() < 1e-12);
    }

    #[test]
    fn state_at_interpolates() {
        let st = CartesianState {
            v: 10.0,
            ..CartesianState::default()
        };
        let tr = predict_obstacles(&[st], 1.0, 0.1).remove(0);
        let p = tr.state_at(0.25);
        assert!((p.x - 2.5).abs() < 1e-12);
        assert_eq!(tr.state_at(5.0).x, tr.points.last().unwrap().x);
    }
}
