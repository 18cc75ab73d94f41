//! Planar points and polyline projection.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

#[allow(unused_imports)]
use crate::math::Float;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `heading`.
    pub fn from_heading(heading: f64) -> Self {
        let (s, c) = heading.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; positive when `other` is to the
    /// left of `self`.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Left-hand normal of a direction vector.
    pub fn perp(self) -> Self {
        Self { x: -self.y, y: self.x }
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Result of projecting a point onto a [`Polyline`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylineProjection {
    /// Arclength of the projection foot.
    pub s: f64,
    /// Signed perpendicular offset, positive left of the travel direction.
    pub d: f64,
    pub foot: Point2,
    pub segment: usize,
}

/// An open polyline with cumulative arclength.
///
/// Zero-length segments are dropped on construction. The first and last
/// segments are treated as rays when projecting, so points slightly before
/// the start or past the end get a perpendicular offset instead of a
/// distance to the endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
    cum_s: Vec<f64>,
}

impl Polyline {
    pub fn new(points: impl IntoIterator<Item = Point2>) -> Option<Self> {
        let mut pts: Vec<Point2> = Vec::new();
        for p in points {
            if pts.last().map_or(true, |q| q.distance(p) > 0.0) {
                pts.push(p);
            }
        }
        if pts.len() < 2 {
            return None;
        }
        let mut cum_s = Vec::with_capacity(pts.len());
        let mut s = 0.0;
        cum_s.push(0.0);
        for w in pts.windows(2) {
            s += w[0].distance(w[1]);
            cum_s.push(s);
        }
        Some(Self { points: pts, cum_s })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cum_s.last().unwrap_or(&0.0)
    }

    /// Closest point on the polyline. Ties are broken toward the smaller
    /// arclength.
    pub fn project(&self, p: Point2) -> PolylineProjection {
        let last = self.points.len() - 2;
        let mut best: Option<(f64, PolylineProjection)> = None;
        for i in 0..=last {
            let a = self.points[i];
            let b = self.points[i + 1];
            let ab = b - a;
            let len2 = ab.dot(ab);
            let mut u = (p - a).dot(ab) / len2;
            if i > 0 {
                u = u.max(0.0);
            }
            if i < last {
                u = u.min(1.0);
            }
            let foot = a + ab * u;
            let dist = p.distance(foot);
            let better = match &best {
                None => true,
                Some((bd, _)) => dist < *bd - 1e-12,
            };
            if better {
                let len = len2.sqrt();
                let d = ab.cross(p - a) / len;
                // Inside a convex kink the foot sits on a vertex; keep the
                // sign but report the true distance.
                let d = if (u > 0.0 && u < 1.0) || (i == 0 && u <= 0.0) || (i == last && u >= 1.0) {
                    d
                } else {
                    dist.copysign(d)
                };
                best = Some((
                    dist,
                    PolylineProjection {
                        s: self.cum_s[i] + u * len,
                        d,
                        foot,
                        segment: i,
                    },
                ));
            }
        }
        best.map(|(_, pr)| pr).expect("polyline has at least one segment")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight() -> Polyline {
        Polyline::new((0..=10).map(|i| Point2::new(i as f64, 0.0))).unwrap()
    }

    #[test]
    fn projects_with_left_positive_sign() {
        let pl = straight();
        let pr = pl.project(Point2::new(3.5, 0.5));
        assert!((pr.s - 3.5).abs() < 1e-12);
        assert!((pr.d - 0.5).abs() < 1e-12);
        let pr = pl.project(Point2::new(3.5, -0.25));
        assert!((pr.d + 0.25).abs() < 1e-12);
    }

    #[test]
    fn ends_extend_as_rays() {
        let pl = straight();
        let pr = pl.project(Point2::new(11.0, 0.3));
        assert!((pr.s - 11.0).abs() < 1e-12);
        assert!((pr.d - 0.3).abs() < 1e-12);
        let pr = pl.project(Point2::new(-1.0, -0.3));
        assert!((pr.s + 1.0).abs() < 1e-12);
        assert!((pr.d + 0.3).abs() < 1e-12);
    }

    #[test]
    fn tie_breaks_toward_smaller_s() {
        // Right-angle corner; the point is equidistant from both legs.
        let pl = Polyline::new([Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)]).unwrap();
        let pr = pl.project(Point2::new(0.5, 0.5));
        assert_eq!(pr.segment, 0);
        assert!((pr.s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn drops_duplicate_points() {
        let pl = Polyline::new([Point2::new(0.0, 0.0), Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)]).unwrap();
        assert_eq!(pl.points().len(), 2);
        assert!(Polyline::new([Point2::new(1.0, 1.0)]).is_none());
    }
}
