use alloc::format;
use alloc::vec::Vec;

use super::{Centerline, CenterlineSample, Pose2, RoadSpec};
use crate::geometry::Point2;
#[allow(unused_imports)]
use crate::math::Float;
use crate::{Error, Result};

/// A lane segment: left/right boundary polylines around a centerline.
#[derive(Debug, Clone, PartialEq)]
pub struct Lanelet {
    pub left_boundary: Vec<Point2>,
    pub right_boundary: Vec<Point2>,
    pub centerline: Centerline,
    pub lane_width: f64,
}

#[derive(Clone, Copy)]
enum Segment {
    Straight(f64),
    /// Radius and signed angle in radians.
    Arc(f64, f64),
}

impl Segment {
    fn length(self) -> f64 {
        match self {
            Segment::Straight(l) => l,
            Segment::Arc(r, a) => r * a.abs(),
        }
    }

    fn curvature(self) -> f64 {
        match self {
            Segment::Straight(_) => 0.0,
            Segment::Arc(r, a) => a.signum() / r,
        }
    }

    /// Pose after travelling `l` from `(start, heading)`; closed form.
    fn pose_at(self, start: Point2, heading: f64, l: f64) -> (Point2, f64) {
        match self {
            Segment::Straight(_) => (start + Point2::from_heading(heading) * l, heading),
            Segment::Arc(r, a) => {
                let sign = a.signum();
                let center = start + Point2::from_heading(heading).perp() * (r * sign);
                let h = heading + sign * l / r;
                let (sh, ch) = h.sin_cos();
                (center + Point2::new(sh, -ch) * (r * sign), h)
            }
        }
    }
}

fn segments(spec: &RoadSpec) -> Vec<Segment> {
    let mut out = Vec::new();
    out.push(Segment::Straight(spec.entry_length));
    if let Some(r) = spec.radius {
        if !spec.turn_angle.is_zero() {
            out.push(Segment::Arc(r, spec.turn_angle.radians()));
        }
    }
    out.push(Segment::Straight(spec.exit_length));
    for sec in &spec.then {
        if !sec.turn_angle.is_zero() {
            out.push(Segment::Arc(sec.radius, sec.turn_angle.radians()));
        }
        out.push(Segment::Straight(sec.exit_length));
    }
    out.retain(|s| s.length() > 0.0);
    out
}

/// Builds entry straight → arc → exit straight starting at the origin heading
/// along +x.
pub fn build_turn_road(spec: &RoadSpec) -> Result<Lanelet> {
    build_lanelet(spec, Pose2::default())
}

/// Builds the lanelet described by `spec`, starting at `origin`.
///
/// Each segment is sampled at the largest spacing not exceeding
/// `sample_step` that divides it evenly, so joins fall on samples. A join
/// sample takes the curvature of the segment that ends there.
pub fn build_lanelet(spec: &RoadSpec, origin: Pose2) -> Result<Lanelet> {
    spec.validate()?;
    let mut pos = Point2::new(origin.x, origin.y);
    let mut heading = origin.heading.radians();
    let segs = segments(spec);
    let mut samples = Vec::new();
    samples.push(CenterlineSample {
        x: pos.x,
        y: pos.y,
        heading,
        curvature: segs[0].curvature(),
        s: 0.0,
    });
    let mut s0 = 0.0;
    for seg in segs {
        let len = seg.length();
        let n = ((len / spec.sample_step) - 1e-9).ceil().max(1.0) as usize;
        let ds = len / n as f64;
        for k in 1..=n {
            let l = if k == n { len } else { k as f64 * ds };
            let (p, h) = seg.pose_at(pos, heading, l);
            samples.push(CenterlineSample {
                x: p.x,
                y: p.y,
                heading: h,
                curvature: seg.curvature(),
                s: s0 + l,
            });
        }
        let end = samples[samples.len() - 1];
        pos = end.position();
        heading = end.heading;
        s0 = end.s;
    }
    let half = spec.lane_width / 2.0;
    let offset = |c: &CenterlineSample, k: f64| c.position() + Point2::from_heading(c.heading).perp() * k;
    let left_boundary = samples.iter().map(|c| offset(c, half)).collect();
    let right_boundary = samples.iter().map(|c| offset(c, -half)).collect();
    Ok(Lanelet {
        left_boundary,
        right_boundary,
        centerline: Centerline::new(samples)?,
        lane_width: spec.lane_width,
    })
}

/// Compiles a lanelet polygon (left/right boundaries) into centerline +
/// road-width form: midpoints, headings from the boundary normal, curvature
/// from heading differences, and the mean boundary separation as width.
pub fn compile_centerline(left: &[Point2], right: &[Point2]) -> Result<(Centerline, f64)> {
    if left.len() != right.len() {
        return Err(Error::Geometry(format!(
            "boundary sample counts differ: {} vs {}",
            left.len(),
            right.len()
        )));
    }
    if left.len() < 2 {
        return Err(Error::Geometry("boundaries need at least two samples".into()));
    }
    let mut samples: Vec<CenterlineSample> = Vec::with_capacity(left.len());
    let mut width_sum = 0.0;
    let mut s = 0.0;
    for (l, r) in left.iter().zip(right) {
        let mid = (*l + *r) * 0.5;
        let across = *l - *r;
        width_sum += across.norm();
        // The normal points right-to-left; the tangent is its clockwise turn.
        let mut heading = (-across.x).atan2(across.y);
        if let Some(prev) = samples.last() {
            s += prev.position().distance(mid);
            let jump = crate::math::wrap_angle(heading - prev.heading);
            heading = prev.heading + jump;
        }
        samples.push(CenterlineSample {
            x: mid.x,
            y: mid.y,
            heading,
            curvature: 0.0,
            s,
        });
    }
    for i in 1..samples.len() {
        let ds = samples[i].s - samples[i - 1].s;
        if ds > 0.0 {
            samples[i].curvature = (samples[i].heading - samples[i - 1].heading) / ds;
        }
    }
    samples[0].curvature = samples[1].curvature;
    let width = width_sum / left.len() as f64;
    Ok((Centerline::new(samples)?, width))
}
