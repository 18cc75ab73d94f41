//! Reference path lookup and Cartesian ↔ Frenet conversion.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::math::wrap_angle;
#[allow(unused_imports)]
use crate::math::Float;
use crate::scenario::{Centerline, Lanelet};
use crate::{Error, Result};

/// Pose, speed, acceleration and path curvature of a point mass moving in
/// the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub a: f64,
    pub curvature: f64,
}

impl CartesianState {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Longitudinal (s) and lateral (d, positive left) coordinates with their
/// first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrenetState {
    pub s: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
    pub d: f64,
    pub d_dot: f64,
    pub d_ddot: f64,
}

impl FrenetState {
    pub fn is_finite(&self) -> bool {
        [self.s, self.s_dot, self.s_ddot, self.d, self.d_dot, self.d_ddot]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// A reference-path point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    pub s: f64,
    pub position: Point2,
    pub heading: f64,
    pub curvature: f64,
    /// dκ/ds.
    pub curvature_rate: f64,
}

impl RefPoint {
    fn tangent(&self) -> Point2 {
        Point2::from_heading(self.heading)
    }
}

/// Arclength-indexed lookup over a lanelet centerline.
///
/// Between samples position, heading and curvature are interpolated
/// linearly. Outside `[0, length]` heading and curvature are held at their
/// endpoint values except that the path continues as a straight ray, so the
/// planner can still sample a horizon that runs past the end of the road;
/// such lookups report `in_range = false`.
#[derive(Debug, Clone)]
pub struct ReferencePath {
    centerline: Centerline,
    tangents: Vec<Point2>,
    lane_width: f64,
}

impl ReferencePath {
    pub fn new(centerline: Centerline, lane_width: f64) -> Self {
        let tangents = centerline
            .samples()
            .iter()
            .map(|c| Point2::from_heading(c.heading))
            .collect();
        Self {
            centerline,
            tangents,
            lane_width,
        }
    }

    pub fn from_lanelet(lanelet: &Lanelet) -> Self {
        Self::new(lanelet.centerline.clone(), lanelet.lane_width)
    }

    pub fn lane_width(&self) -> f64 {
        self.lane_width
    }

    pub fn length(&self) -> f64 {
        self.centerline.length()
    }

    pub fn centerline(&self) -> &Centerline {
        &self.centerline
    }

    /// Reference point at `s`, plus whether `s` lies on the path.
    pub fn lookup(&self, s: f64) -> (RefPoint, bool) {
        let samples = self.centerline.samples();
        let len = self.length();
        if s < 0.0 || s > len {
            let (end, t, ds) = if s < 0.0 {
                (&samples[0], self.tangents[0], s)
            } else {
                (&samples[samples.len() - 1], self.tangents[samples.len() - 1], s - len)
            };
            let rp = RefPoint {
                s,
                position: end.position() + t * ds,
                heading: end.heading,
                curvature: 0.0,
                curvature_rate: 0.0,
            };
            return (rp, false);
        }
        let i = self.centerline.segment_index(s);
        let a = &samples[i];
        let b = &samples[i + 1];
        let span = b.s - a.s;
        let u = (s - a.s) / span;
        let rp = RefPoint {
            s,
            position: a.position() + (b.position() - a.position()) * u,
            heading: a.heading + u * (b.heading - a.heading),
            curvature: a.curvature + u * (b.curvature - a.curvature),
            curvature_rate: (b.curvature - a.curvature) / span,
        };
        (rp, true)
    }

    /// Arclength and signed lateral offset of `p`.
    ///
    /// The foot point is the root of `(p − x(s))·t(s) = 0` with the
    /// interpolated position and tangent, which makes this the exact inverse
    /// of `x(s) + d·n(s)`. Among several roots the one nearest to `p` wins,
    /// ties going to the smaller `s`. Points farther than two lane widths
    /// from the path are rejected.
    pub fn project(&self, p: Point2) -> Result<(f64, f64)> {
        let samples = self.centerline.samples();
        let n = samples.len();
        let f: Vec<f64> = samples
            .iter()
            .zip(&self.tangents)
            .map(|(c, t)| (p - c.position()).dot(*t))
            .collect();
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |s: f64, d: f64| {
            let better = match best {
                None => true,
                Some((_, bd)) => d.abs() < bd.abs() - 1e-12,
            };
            if better {
                best = Some((s, d));
            }
        };
        if f[0] < 0.0 {
            let d = (p - samples[0].position()).dot(self.tangents[0].perp());
            consider(f[0], d);
        }
        for i in 0..n - 1 {
            if f[i] >= 0.0 && f[i + 1] <= 0.0 {
                let s = self.solve_foot(p, i, f[i], f[i + 1]);
                let (rp, _) = self.lookup(s);
                let d = (p - rp.position).dot(rp.tangent().perp());
                consider(s, d);
            }
        }
        if f[n - 1] > 0.0 {
            let d = (p - samples[n - 1].position()).dot(self.tangents[n - 1].perp());
            consider(self.length() + f[n - 1], d);
        }
        let limit = 2.0 * self.lane_width;
        match best {
            Some((s, d)) if d.abs() <= limit => Ok((s, d)),
            Some((_, d)) => Err(Error::Projection {
                distance: d.abs(),
                limit,
            }),
            None => Err(Error::Projection {
                distance: f64::INFINITY,
                limit,
            }),
        }
    }

    fn solve_foot(&self, p: Point2, i: usize, f0: f64, f1: f64) -> f64 {
        let samples = self.centerline.samples();
        let a = &samples[i];
        let b = &samples[i + 1];
        let chord = b.position() - a.position();
        let dh = b.heading - a.heading;
        let g = |u: f64| {
            let t = Point2::from_heading(a.heading + u * dh);
            let r = p - (a.position() + chord * u);
            (r.dot(t), -chord.dot(t) + r.dot(t.perp()) * dh)
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut u = if f0 == f1 { 0.5 } else { f0 / (f0 - f1) };
        for _ in 0..60 {
            let (gu, dg) = g(u);
            if gu == 0.0 {
                break;
            }
            if gu > 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            let mut next = if dg != 0.0 { u - gu / dg } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() < 1e-16 {
                u = next;
                break;
            }
            u = next;
        }
        a.s + u * (b.s - a.s)
    }
}

/// Frenet coordinates of a Cartesian state relative to `path`.
pub fn cartesian_to_frenet(path: &ReferencePath, state: &CartesianState) -> Result<FrenetState> {
    let (s, d) = path.project(state.position())?;
    let (rp, _) = path.lookup(s);
    let kr = rp.curvature;
    let dkr = rp.curvature_rate;
    let one_minus_kd = 1.0 - kr * d;
    if one_minus_kd <= 0.0 {
        return Err(Error::Geometry(
            "state lies beyond the path's centre of curvature".into(),
        ));
    }
    let dtheta = wrap_angle(state.heading - rp.heading);
    let (sin_dt, cos_dt) = dtheta.sin_cos();
    if cos_dt <= 0.0 {
        return Err(Error::Geometry("heading points against the path direction".into()));
    }
    let tan_dt = sin_dt / cos_dt;
    let d_prime = one_minus_kd * tan_dt;
    let kd_prime = dkr * d + kr * d_prime;
    let d_pprime =
        -kd_prime * tan_dt + one_minus_kd / (cos_dt * cos_dt) * (state.curvature * one_minus_kd / cos_dt - kr);
    let s_dot = state.v * cos_dt / one_minus_kd;
    let delta = state.curvature * one_minus_kd / cos_dt - kr;
    let s_ddot = (state.a * cos_dt - s_dot * s_dot * (d_prime * delta - kd_prime)) / one_minus_kd;
    Ok(FrenetState {
        s,
        s_dot,
        s_ddot,
        d,
        d_dot: state.v * sin_dt,
        d_ddot: d_pprime * s_dot * s_dot + d_prime * s_ddot,
    })
}

/// Cartesian state of a Frenet state. Fails where the offset curve folds
/// (`1 − κ(s)·d ≤ 0`).
pub fn frenet_to_cartesian(path: &ReferencePath, fs: &FrenetState) -> Result<CartesianState> {
    let (rp, _) = path.lookup(fs.s);
    let kr = rp.curvature;
    let one_minus_kd = 1.0 - kr * fs.d;
    if one_minus_kd <= 0.0 {
        return Err(Error::Geometry("offset curve folds: |d·κ| >= 1".into()));
    }
    let (d_prime, d_pprime) = if fs.s_dot.abs() > 1e-6 {
        let dp = fs.d_dot / fs.s_dot;
        (dp, (fs.d_ddot - dp * fs.s_ddot) / (fs.s_dot * fs.s_dot))
    } else {
        (0.0, 0.0)
    };
    let dtheta = d_prime.atan2(one_minus_kd);
    let (sin_dt, cos_dt) = dtheta.sin_cos();
    let tan_dt = sin_dt / cos_dt;
    let kd_prime = rp.curvature_rate * fs.d + kr * d_prime;
    let curvature = ((d_pprime + kd_prime * tan_dt) * cos_dt * cos_dt / one_minus_kd + kr) * cos_dt / one_minus_kd;
    let v = (one_minus_kd * fs.s_dot).hypot(d_prime * fs.s_dot);
    let delta = curvature * one_minus_kd / cos_dt - kr;
    let a = fs.s_ddot * one_minus_kd / cos_dt + fs.s_dot * fs.s_dot / cos_dt * (d_prime * delta - kd_prime);
    let p = rp.position + rp.tangent().perp() * fs.d;
    Ok(CartesianState {
        x: p.x,
        y: p.y,
        heading: wrap_angle(rp.heading + dtheta),
        v,
        a,
        curvature,
    })
}
