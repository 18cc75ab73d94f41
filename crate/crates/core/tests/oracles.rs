//! Independent numerical oracles for the geometric, planning and dynamics
//! operations. Each oracle is a brute-force computation written here, not a
//! call back into the crate.

use std::f64::consts::PI;

use multifi_core::backends::{
    integrate_dynamics, pi_longitudinal, pure_pursuit_lateral, saturated_steer, vehicle_catalog, Backend,
    ControlCommand, ControllerGains, HifiBackend, PiState, VehicleState,
};
use multifi_core::evaluation::{lateral_displacement, runtime_stats};
use multifi_core::geometry::Point2;
use multifi_core::math::wrap_angle;
use multifi_core::planner::{
    cartesian_to_frenet, footprints_overlap, solve_quartic_velocity_keeping, solve_quintic, CartesianState,
    FrenetState, PlannedTrajectory, Planner, PlannerConfig, ReferencePath, TrajectoryPoint,
};
use multifi_core::scenario::{build_turn_road, place_agent, AgentSpec, Angle, GoalRegion, RoadSpec};

const G: f64 = 9.81;

fn arc_only(radius: f64, degrees: f64) -> RoadSpec {
    RoadSpec {
        entry_length: 0.0,
        exit_length: 0.0,
        ..RoadSpec::turn(radius, Angle::from_degrees(degrees))
    }
}

/// Exact centreline of entry 40 m, left arc of radius 10, exit: position at `s`.
fn turn_point(s: f64, radius: f64, angle: f64) -> Point2 {
    let arc = radius * angle;
    if s <= 40.0 {
        Point2::new(s, 0.0)
    } else if s <= 40.0 + arc {
        let th = (s - 40.0) / radius;
        Point2::new(40.0 + radius * th.sin(), radius * (1.0 - th.cos()))
    } else {
        let end = Point2::new(40.0 + radius * angle.sin(), radius * (1.0 - angle.cos()));
        end + Point2::new(angle.cos(), angle.sin()) * (s - 40.0 - arc)
    }
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Algebraic least-squares circle fit; returns the radius.
fn fit_circle_radius(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut suu, mut svv, mut suv, mut suuu, mut svvv, mut suvv, mut svuu) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (u, v) = (p.0 - mx, p.1 - my);
        suu += u * u;
        svv += v * v;
        suv += u * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suvv += u * v * v;
        svuu += v * u * u;
    }
    let c = gauss_solve(
        vec![vec![suu, suv], vec![suv, svv]],
        vec![0.5 * (suuu + suvv), 0.5 * (svvv + svuu)],
    );
    (c[0] * c[0] + c[1] * c[1] + (suu + svv) / n).sqrt()
}

#[test]
fn arc_endpoint_matches_heading_ode() {
    let lanelet = build_turn_road(&arc_only(10.0, 120.0)).unwrap();
    let end = *lanelet.centerline.samples().last().unwrap();
    assert!((lanelet.centerline.length() - 20.944).abs() < 1e-3);

    // θ'(s) = 1/r integrated with the midpoint rule at ds = 1e-4.
    let ds = 1e-4;
    let total = 10.0 * 120f64.to_radians();
    let n = (total / ds).round() as usize;
    let h = total / n as f64;
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for k in 0..n {
        let theta = (k as f64 + 0.5) * h / 10.0;
        x += h * theta.cos();
        y += h * theta.sin();
    }
    assert!(
        (end.x - x).abs() < 1e-6 && (end.y - y).abs() < 1e-6,
        "({}, {}) vs ({x}, {y})",
        end.x,
        end.y
    );
    assert!((end.heading - 120f64.to_radians()).abs() < 1e-9);
}

#[test]
fn mid_arc_placement_matches_dense_resampling() {
    let lanelet = build_turn_road(&RoadSpec::turn(10.0, Angle::from_degrees(90.0))).unwrap();
    let s = 40.0 + 10.0 * PI / 4.0 + 0.123;
    let goal = GoalRegion::near_end_of(&lanelet);
    let agent = AgentSpec::new(1, "touring", s, goal);
    let st = place_agent(&lanelet, &agent).unwrap();

    // Chord interpolation stays within the sagitta of a 0.5 m sample step.
    let exact_angle = (s - 40.0) / 10.0;
    let exact = (40.0 + 10.0 * exact_angle.sin(), 10.0 - 10.0 * exact_angle.cos());
    assert!((st.x - exact.0).hypot(st.y - exact.1) < 0.5 * 0.5 / (8.0 * 10.0) + 1e-9);
    assert!((st.heading - exact_angle).abs() < 0.5 / 10.0);
    assert_eq!(st.v, 0.0);
}

#[test]
fn projection_near_arc_matches_brute_force() {
    let lanelet = build_turn_road(&RoadSpec::turn(10.0, Angle::from_degrees(90.0))).unwrap();
    let path = ReferencePath::from_lanelet(&lanelet);
    let len = lanelet.centerline.length();
    for &(qx, qy) in &[(45.0, 1.2), (47.3, 3.9), (49.0, 6.5), (48.0, 2.0), (44.0, -0.8)] {
        let fs = cartesian_to_frenet(
            &path,
            &CartesianState {
                x: qx,
                y: qy,
                ..CartesianState::default()
            },
        )
        .unwrap();
        let q = Point2::new(qx, qy);
        let mut best = (f64::INFINITY, 0.0);
        let n = (len / 1e-4) as usize;
        for k in 0..=n {
            let s = k as f64 * 1e-4;
            let dist = turn_point(s, 10.0, PI / 2.0).distance(q);
            if dist < best.0 {
                best = (dist, s);
            }
        }
        // The 0.5 m sampled path departs from the exact arc by its sagitta.
        let tol = 0.5 * 0.5 / (8.0 * 10.0) + 1e-4;
        assert!((fs.s - best.1).abs() < tol, "s {} vs {}", fs.s, best.1);
        assert!((fs.d.abs() - best.0).abs() < tol, "d {} vs {}", fs.d, best.0);
    }
}

#[test]
fn quintic_matches_direct_linear_solve() {
    let t: f64 = 1.0;
    let q = solve_quintic(1.0, 0.0, 0.0, 0.0, t).unwrap();
    let row = |t: f64, der: usize| -> Vec<f64> {
        (0..6)
            .map(|i| {
                if i < der {
                    0.0
                } else {
                    let f: f64 = (0..der).map(|k| (i - k) as f64).product();
                    f * t.powi((i - der) as i32)
                }
            })
            .collect()
    };
    let a = vec![row(0.0, 0), row(0.0, 1), row(0.0, 2), row(t, 0), row(t, 1), row(t, 2)];
    let b = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let x = gauss_solve(a.clone(), b.clone());
    for (i, (c, o)) in q.coeffs.iter().zip(&x).enumerate() {
        assert!((c - o).abs() < 1e-9, "coefficient {i}: {c} vs {o}");
    }
    for (r, rhs) in a.iter().zip(&b) {
        let lhs: f64 = r.iter().zip(&q.coeffs).map(|(u, v)| u * v).sum();
        assert!((lhs - rhs).abs() < 1e-9);
    }
    assert!((q.value(0.0) - 1.0).abs() < 1e-9 && q.value(1.0).abs() < 1e-9);
    assert!(q.velocity(1.0).abs() < 1e-9 && q.acceleration(1.0).abs() < 1e-9);
}

#[test]
fn doubling_horizon_scales_peak_jerk_by_an_eighth() {
    let peak = |t: f64| {
        let q = solve_quintic(1.0, 0.0, 0.0, 0.0, t).unwrap();
        (0..=10_000)
            .map(|k| q.jerk(t * k as f64 / 10_000.0).abs())
            .fold(0.0, f64::max)
    };
    let ratio = peak(4.0) / peak(2.0);
    assert!((ratio - 0.125).abs() < 1e-9, "{ratio}");
}

#[test]
fn standing_start_quartic_is_monotone() {
    let q = solve_quartic_velocity_keeping(0.0, 0.0, 0.0, 10.0, 4.0).unwrap();
    let min_accel = (0..=10_000)
        .map(|k| q.acceleration(4.0 * k as f64 / 10_000.0))
        .fold(f64::INFINITY, f64::min);
    assert!(min_accel >= -1e-9, "{min_accel}");
    assert!((q.velocity(4.0) - 10.0).abs() < 1e-9);
}

fn straight_path(length: f64) -> ReferencePath {
    let lanelet = build_turn_road(&RoadSpec {
        entry_length: length,
        exit_length: 0.0,
        ..RoadSpec::default()
    })
    .unwrap();
    ReferencePath::from_lanelet(&lanelet)
}

/// ∫₀ᵀ f² by composite Simpson on 2000 panels.
fn simpson_sq(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    let n = 2000;
    let h = t / n as f64;
    let mut acc = f(0.0).powi(2) + f(t).powi(2);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(k as f64 * h).powi(2);
    }
    acc * h / 3.0
}

#[test]
fn offset_start_selects_exhaustive_cost_minimum() {
    let cfg = PlannerConfig::default();
    let planner = Planner::new(cfg.clone(), 0.1).unwrap();
    let path = straight_path(200.0);
    let fs = FrenetState {
        s: 20.0,
        s_dot: 10.0,
        d: 1.0,
        ..FrenetState::default()
    };
    let cands = planner.evaluate(&path, &fs, &[], false);
    let costs: Vec<f64> = cands
        .iter()
        .map(|c| {
            let t = c.horizon;
            cfg.k_jerk * (simpson_sq(|x| c.lateral.jerk(x), t) + simpson_sq(|x| c.longitudinal.jerk(x), t))
                + cfg.k_time * t
                + cfg.k_lat_dev * c.lateral.value(t).powi(2)
                + cfg.k_speed_dev * (c.longitudinal.velocity(t) - cfg.target_speed).powi(2)
        })
        .collect();
    for (c, oracle) in cands.iter().zip(&costs) {
        assert!((c.cost - oracle).abs() < 1e-6 * oracle.max(1.0));
    }
    let oracle_best = (0..cands.len())
        .filter(|&i| cands[i].feasible())
        .fold(None, |b: Option<usize>, i| match b {
            Some(j) if costs[j] <= costs[i] => Some(j),
            _ => Some(i),
        })
        .unwrap();
    assert_eq!(Planner::select(&cands), Some(oracle_best));

    let traj = planner.plan(&path, &fs, &[], false).unwrap();
    let chosen = &cands[oracle_best];
    assert_eq!(chosen.target_offset, 0.0);
    let end = traj.points.last().unwrap();
    assert!((end.y - chosen.target_offset).abs() < 1e-9);
    let n = chosen.frenet.len();
    assert!(chosen.frenet[n - 1].d.abs() <= chosen.frenet[n - 2].d.abs());
}

#[test]
fn stopped_obstacle_ahead_rules_out_cruising_in_lane() {
    let cfg = PlannerConfig::default();
    let planner = Planner::new(cfg.clone(), 0.1).unwrap();
    let path = straight_path(200.0);
    let fs = FrenetState {
        s: 20.0,
        s_dot: 10.0,
        ..FrenetState::default()
    };
    let obstacle = planner.predict_obstacles(&[CartesianState {
        x: 30.0,
        ..CartesianState::default()
    }]);
    let cands = planner.evaluate(&path, &fs, &obstacle, false);
    // Oracle: three circles per body along its length, centred half a
    // wheelbase ahead of the rear axle, overlap at any common time.
    let fp = cfg.footprint;
    let circles = |p: &TrajectoryPoint| {
        let (dx, dy) = (p.heading.cos(), p.heading.sin());
        let (mx, my) = (p.x + dx * fp.wheelbase / 2.0, p.y + dy * fp.wheelbase / 2.0);
        let sp = fp.length / 3.0;
        [-1.0, 0.0, 1.0].map(|k| (mx + k * sp * dx, my + k * sp * dy))
    };
    let r = (fp.length / 6.0).hypot(fp.width / 2.0);
    for c in &cands {
        let hits = c.points.iter().zip(&obstacle[0].points).any(|(p, o)| {
            let a = circles(p);
            let b = circles(o);
            a.iter()
                .any(|u| b.iter().any(|v| (u.0 - v.0).hypot(u.1 - v.1) < 2.0 * r))
        });
        if hits {
            assert!(!c.feasible());
        }
        for (p, o) in c.points.iter().zip(&obstacle[0].points) {
            let a = circles(p);
            let b = circles(o);
            let oracle = a
                .iter()
                .any(|u| b.iter().any(|v| (u.0 - v.0).hypot(u.1 - v.1) < 2.0 * r));
            assert_eq!(
                oracle,
                footprints_overlap(&fp, (p.x, p.y, p.heading), &fp, (o.x, o.y, o.heading))
            );
        }
    }
    match planner.plan(&path, &fs, &obstacle, false) {
        Ok(traj) => {
            let cruising = traj.points.iter().all(|p| p.y.abs() < 1e-6) && traj.points.last().unwrap().v > 9.0;
            assert!(!cruising);
        }
        Err(e) => assert!(matches!(e, multifi_core::Error::FallbackRequired)),
    }
}

fn line_trajectory(x0: f64, y: f64, v: f64, start_time: f64) -> PlannedTrajectory {
    PlannedTrajectory {
        start_time,
        points: (0..=40)
            .map(|k| {
                let t = k as f64 * 0.1;
                TrajectoryPoint {
                    t,
                    x: x0 + v * t,
                    y,
                    heading: 0.0,
                    v,
                    a: 0.0,
                    curvature: 0.0,
                }
            })
            .collect(),
    }
}

#[test]
fn pure_pursuit_offset_matches_geometric_search() {
    let p = vehicle_catalog("touring").unwrap();
    let g = ControllerGains::default();
    let st = VehicleState {
        y: -0.5,
        v: 5.0,
        ..VehicleState::default()
    };
    let steer = pure_pursuit_lateral(&st, &line_trajectory(0.0, 0.0, 5.0, 0.0), &p, &g);
    let ld = g.lookahead(5.0);
    // The target lies `ld` along the line from the foot of the perpendicular.
    let alpha = 0.5f64.atan2(ld);
    let expected = (2.0 * p.wheelbase * alpha.sin() / ld).atan();
    assert!(steer > 0.0);
    assert!((steer - expected).abs() < 1e-3, "{steer} vs {expected}");
}

#[test]
fn pure_pursuit_circle_identity() {
    let p = vehicle_catalog("touring").unwrap();
    let g = ControllerGains::default();
    let r = 30.0;
    let v = 10.0;
    let ld = g.lookahead(v);
    // Trajectory on a circle of radius r through the rear axle, densely
    // sampled so the arc-length lookahead is the chord to within 1e-6.
    let traj = PlannedTrajectory {
        start_time: 0.0,
        points: (0..=4000)
            .map(|k| {
                let s = k as f64 * 0.005;
                let th = s / r;
                TrajectoryPoint {
                    t: s / v,
                    x: r * th.sin(),
                    y: r * (1.0 - th.cos()),
                    heading: th,
                    v,
                    a: 0.0,
                    curvature: 1.0 / r,
                }
            })
            .collect(),
    };
    let st = VehicleState {
        v,
        ..VehicleState::default()
    };
    let steer = pure_pursuit_lateral(&st, &traj, &p, &g);
    // For a chord of length c the bearing satisfies sin α = c/(2r).
    let chord = 2.0 * r * (ld / (2.0 * r)).sin();
    let alpha = (chord / (2.0 * r)).asin();
    assert!((steer - (2.0 * p.wheelbase * alpha.sin() / ld).atan()).abs() < 1e-6);
    assert!((steer - (p.wheelbase / r).atan()).abs() < 2e-3 * (p.wheelbase / r).atan());
}

#[test]
fn closed_loop_speed_error_vanishes() {
    let params = vehicle_catalog("touring").unwrap();
    let mut backend = HifiBackend::new(params, ControllerGains::default(), 10).unwrap();
    let mut st = VehicleState {
        v: 8.0,
        ..VehicleState::default()
    };
    while st.t < 20.0 - 1e-9 {
        let traj = line_trajectory(st.x, 0.0, 10.0, st.t);
        st = backend.step(&st, &traj, 0.1).unwrap().state;
    }
    assert!((st.v - 10.0).abs() < 0.05, "{}", st.v);
}

#[test]
fn pi_integral_state_is_used() {
    let g = ControllerGains::default();
    let traj = line_trajectory(0.0, 0.0, 10.0, 0.0);
    let st = VehicleState {
        v: 9.0,
        ..VehicleState::default()
    };
    let mut pi = PiState::default();
    let first = pi_longitudinal(&st, &traj, &g, &mut pi, 0.1);
    let second = pi_longitudinal(&st, &traj, &g, &mut pi, 0.1);
    assert!((first - (1.5 + 0.3 * 0.1)).abs() < 1e-12);
    assert!((second - (1.5 + 0.3 * 0.2)).abs() < 1e-12);
}

fn hold_circle(params_id: &str, steer: f64, v: f64, seconds: f64, dt: f64) -> Vec<(f64, f64)> {
    let p = vehicle_catalog(params_id).unwrap();
    let cmd = ControlCommand {
        steer_target: steer,
        accel_target: 0.0,
    };
    let mut st = VehicleState {
        v,
        steer,
        ..VehicleState::default()
    };
    let mut out = Vec::new();
    let n = (seconds / dt).round() as usize;
    for _ in 0..n {
        st = integrate_dynamics(&st, cmd, &p, dt, 0.0);
        out.push((st.x, st.y));
    }
    out
}

#[test]
fn constant_steer_circle_radius() {
    let delta: f64 = 0.1;
    let v = 5.0;
    let expected = 2.7 / delta.tan();
    let pts = hold_circle("touring", delta, v, 2.0 * PI * expected / v, 1e-3);
    let r = fit_circle_radius(&pts);
    assert!((r - expected).abs() < 0.02 * expected, "{r} vs {expected}");
}

#[test]
fn saturated_turn_radius() {
    let p = vehicle_catalog("touring").unwrap();
    let delta: f64 = 0.1;
    let v = (2.0 * p.mu * G * p.wheelbase / delta.tan()).sqrt();
    let eff = saturated_steer(delta, v, &p);
    assert!((v * v * eff.tan() / p.wheelbase - p.mu * G).abs() < 1e-9);
    let expected = v * v / (p.mu * G);
    let pts = hold_circle("touring", delta, v, 2.0 * PI * expected / v, 1e-3);
    let r = fit_circle_radius(&pts);
    assert!((r - expected).abs() < 0.05 * expected, "{r} vs {expected}");
}

/// 30 s of the touring car tracking a fixed winding reference: an S-shaped
/// centreline driven at 10 m/s.
fn canonical_run(substeps: usize) -> VehicleState {
    let road = RoadSpec {
        entry_length: 30.0,
        exit_length: 30.0,
        then: vec![multifi_core::scenario::TurnSection {
            radius: 25.0,
            turn_angle: Angle::from_degrees(-90.0),
            exit_length: 150.0,
        }],
        ..RoadSpec::turn(25.0, Angle::from_degrees(90.0))
    };
    let lanelet = build_turn_road(&road).unwrap();
    let c = &lanelet.centerline;
    let v = 10.0;
    let traj = PlannedTrajectory {
        start_time: 0.0,
        points: (0..=((c.length() / v) / 0.1) as usize)
            .map(|k| {
                let t = k as f64 * 0.1;
                let s = c.interpolate(v * t);
                TrajectoryPoint {
                    t,
                    x: s.x,
                    y: s.y,
                    heading: s.heading,
                    v,
                    a: 0.0,
                    curvature: s.curvature,
                }
            })
            .collect(),
    };
    let mut backend = HifiBackend::new(
        vehicle_catalog("touring").unwrap(),
        ControllerGains::default(),
        substeps,
    )
    .unwrap();
    let mut st = VehicleState {
        v,
        ..VehicleState::default()
    };
    for _ in 0..300 {
        st = backend.step(&st, &traj, 0.1).unwrap().state;
    }
    st
}

#[test]
fn halving_the_substep_converges() {
    let a = canonical_run(10);
    let b = canonical_run(20);
    assert!((a.t - 30.0).abs() < 1e-9);
    let shift = (a.x - b.x).hypot(a.y - b.y);
    assert!(shift < 0.01, "{shift}");
}

#[test]
fn concentric_arc_displacement() {
    let r = 10.0;
    let reference: Vec<Point2> = (0..=3000)
        .map(|k| {
            let th = k as f64 * (PI / 2.0) / 3000.0;
            Point2::new(r * th.sin(), r * (1.0 - th.cos()))
        })
        .collect();
    let inner = r - 0.3;
    let cmp: Vec<Point2> = (1..200)
        .map(|k| {
            let th = k as f64 * 0.005;
            Point2::new(inner * th.sin(), r - inner * th.cos())
        })
        .collect();
    let d = lateral_displacement(&reference, &cmp).unwrap();
    for x in &d {
        assert!((x.d - 0.3).abs() < 1e-3, "{}", x.d);
    }
    assert!(d.windows(2).all(|w| w[1].s > w[0].s));
}

#[test]
fn orientation_error_takes_the_short_way() {
    let e = wrap_angle(-3.10 - 3.10);
    assert!((e.abs() - (2.0 * PI - 6.2)).abs() < 1e-12);
    assert!((e.abs() - 0.0832).abs() < 1e-4);
}

#[test]
fn runtime_stats_use_sample_deviation() {
    let s = runtime_stats(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!((s.min, s.max, s.mean, s.median), (1.0, 3.0, 2.0, 2.0));
    assert!((s.std - 1.0).abs() < 1e-12);
    let one = runtime_stats(&[4.2]).unwrap();
    assert_eq!(one.std, 0.0);
    assert!(one.single_sample);
    assert!(runtime_stats(&[]).is_err());
}
