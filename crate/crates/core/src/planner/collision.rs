//! Three-circle vehicle footprint.

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
#[allow(unused_imports)]
use crate::math::Float;

/// Rigid vehicle outline, referenced at the rear axle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
    pub wheelbase: f64,
}

impl Footprint {
    /// Three equal circles spaced along the body, centred on the body midpoint
    /// half a wheelbase ahead of the rear axle.
    pub fn circles(&self, x: f64, y: f64, heading: f64) -> ([Point2; 3], f64) {
        let dir = Point2::from_heading(heading);
        let mid = Point2::new(x, y) + dir * (self.wheelbase / 2.0);
        let spacing = self.length / 3.0;
        let radius = (self.length / 6.0).hypot(self.width / 2.0);
        ([mid - dir * spacing, mid, mid + dir * spacing], radius)
    }
}

/// True when any circle of one footprint overlaps any circle of the other.
pub fn footprints_overlap(a: &Footprint, pose_a: (f64, f64, f64), b: &Footprint, pose_b: (f64, f64, f64)) -> bool {
    let (ca, ra) = a.circles(pose_a.0, pose_a.1, pose_a.2);
    let (cb, rb) = b.circles(pose_b.0, pose_b.1, pose_b.2);
    let reach = ra + rb;
    ca.iter().any(|p| cb.iter().any(|q| p.distance(*q) < reach))
}
