//! Planar geometry: half-planes, convex hulls and hull-to-hull distance.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

pub type Point = Vector2<f64>;

/// Linear position constraint `normal · p + offset <= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfPlane {
    pub fn new(normal: Point, offset: f64) -> Self {
        Self { normal: [normal.x, normal.y], offset }
    }

    /// Signed residual; positive values are violations.
    pub fn residual(&self, p: &Point) -> f64 {
        self.normal[0] * p.x + self.normal[1] * p.y + self.offset
    }
}

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Counter-clockwise convex hull (Andrew's monotone chain). Degenerate inputs
/// yield one vertex (all points coincide) or two (all points collinear).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() + 1);
    // lower chain, then upper chain
    for p in &pts {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

/// Closest point to `p` on segment `[a, b]`.
fn closest_on_segment(p: &Point, a: &Point, b: &Point) -> Point {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let s = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * s
}

fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: &Point, q: &Point, r: &Point| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (d1 == 0.0 && on(c, d, a)) || (d2 == 0.0 && on(c, d, b)) || (d3 == 0.0 && on(a, b, c)) || (d4 == 0.0 && on(a, b, d))
}

/// Point inside or on a CCW convex polygon with at least three vertices.
fn inside_polygon(poly: &[Point], p: &Point) -> bool {
    (0..poly.len()).all(|i| cross(&poly[i], &poly[(i + 1) % poly.len()], p) >= 0.0)
}

fn edges(hull: &[Point]) -> Vec<(Point, Point)> {
    match hull.len() {
        0 => Vec::new(),
        1 => vec![(hull[0], hull[0])],
        2 => vec![(hull[0], hull[1])],
        n => (0..n).map(|i| (hull[i], hull[(i + 1) % n])).collect(),
    }
}

/// Nearest points `(pa, pb)` between two convex hulls, or `None` when the
/// hulls overlap or touch.
pub fn hull_nearest_points(a: &[Point], b: &[Point]) -> Option<(Point, Point)> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    if a.len() >= 3 && b.iter().any(|p| inside_polygon(a, p)) {
        return None;
    }
    if b.len() >= 3 && a.iter().any(|p| inside_polygon(b, p)) {
        return None;
    }
    let (ea, eb) = (edges(a), edges(b));
    let mut best: Option<(f64, Point, Point)> = None;
    for (a0, a1) in &ea {
        for (b0, b1) in &eb {
            if segments_intersect(a0, a1, b0, b1) {
                return None;
            }
            let cands = [
                (closest_on_segment(b0, a0, a1), *b0),
                (closest_on_segment(b1, a0, a1), *b1),
                (*a0, closest_on_segment(a0, b0, b1)),
                (*a1, closest_on_segment(a1, b0, b1)),
            ];
            for (pa, pb) in cands {
                let d = (pb - pa).norm();
                if best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
                    best = Some((d, pa, pb));
                }
            }
        }
    }
    best.filter(|(d, _, _)| *d > 0.0).map(|(_, pa, pb)| (pa, pb))
}
