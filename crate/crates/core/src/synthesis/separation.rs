//! Hard-margin linear separation of two planar point sets.
//!
//! The dual of the hard-margin SVM is the nearest-point problem between the
//! convex hulls of the two classes; in the plane it is solved exactly by
//! computing both hulls and their closest pair of points.

use crate::geometry::{convex_hull, hull_nearest_points, HalfPlane, Point};
use serde::{Deserialize, Serialize};

/// Maximum-margin separator. Side `a` satisfies `normal · p + offset_a <= 0`,
/// side `b` satisfies `normal · p + offset_b >= 0`; both planes touch their sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub normal: [f64; 2],
    pub offset_a: f64,
    pub offset_b: f64,
}

impl Separation {
    /// Distance between the two supporting planes.
    pub fn margin(&self) -> f64 {
        self.offset_a - self.offset_b
    }

    fn normal_vec(&self) -> Point {
        Point::new(self.normal[0], self.normal[1])
    }

    /// Splits the gap into one constraint per side so that any pair of
    /// positions satisfying both is at least `r_a + r_b` apart: each side's
    /// buffer circle stays behind a common split line. Requires
    /// `margin() >= r_a + r_b` for the supporting planes to satisfy them.
    pub fn split(&self, r_a: f64, r_b: f64) -> (HalfPlane, HalfPlane) {
        let n = self.normal_vec();
        let s_a = -self.offset_a;
        let split = s_a + 0.5 * (self.margin() - r_a - r_b) + r_a;
        (HalfPlane::new(n, -(split - r_a)), HalfPlane::new(-n, split + r_b))
    }
}

/// Maximum-margin separating hyperplane, or `None` when the sets are not
/// strictly linearly separable (including shared points).
pub fn fit_separating_hyperplane(points_a: &[Point], points_b: &[Point]) -> Option<Separation> {
    assert!(!points_a.is_empty() && !points_b.is_empty(), "both point sets must be non-empty");
    let (ha, hb) = (convex_hull(points_a), convex_hull(points_b));
    let (pa, pb) = hull_nearest_points(&ha, &hb)?;
    let n = (pb - pa).normalize();
    // Supporting offsets from the vertices themselves so every point satisfies
    // its side exactly in floating point.
    let s_a = ha.iter().map(|p| n.dot(p)).fold(f64::NEG_INFINITY, f64::max);
    let s_b = hb.iter().map(|p| n.dot(p)).fold(f64::INFINITY, f64::min);
    if !(s_b > s_a) {
        return None;
    }
    Some(Separation { normal: [n.x, n.y], offset_a: -s_a, offset_b: -s_b })
}
