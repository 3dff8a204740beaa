use serde::{Deserialize, Serialize};

use super::Point2;

/// 2D line segment with distinct endpoints (length > 1e-9 m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSeg2 {
    pub a: Point2,
    pub b: Point2,
}

impl LineSeg2 {
    pub fn new(a: Point2, b: Point2) -> Self {
        debug_assert!(a.distance(b) > 1e-9, "degenerate segment");
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// Direction angle in [0, pi): undirected orientation of the segment.
    pub fn direction_angle(&self) -> f64 {
        let mut th = (self.b.y - self.a.y).atan2(self.b.x - self.a.x);
        if th < 0.0 {
            th += std::f64::consts::PI;
        }
        if th >= std::f64::consts::PI {
            th -= std::f64::consts::PI;
        }
        th
    }

    /// Distance from `p` to the closed segment.
    pub fn distance_to_point(&self, p: Point2) -> f64 {
        let vx = self.b.x - self.a.x;
        let vy = self.b.y - self.a.y;
        let len2 = vx * vx + vy * vy;
        if len2 == 0.0 {
            return self.a.distance(p);
        }
        let t = ((p.x - self.a.x) * vx + (p.y - self.a.y) * vy) / len2;
        let t = t.clamp(0.0, 1.0);
        Point2::new(self.a.x + t * vx, self.a.y + t * vy).distance(p)
    }
}

/// Intersection parameter pair (t, u) such that
/// `a0 + t*(a1-a0) == b0 + u*(b1-b0)`, if the supporting lines are not
/// parallel. Callers decide whether t/u ranges make it a segment hit.
pub fn line_intersection_params(
    a0: Point2,
    a1: Point2,
    b0: Point2,
    b1: Point2,
) -> Option<(f64, f64)> {
    let rx = a1.x - a0.x;
    let ry = a1.y - a0.y;
    let sx = b1.x - b0.x;
    let sy = b1.y - b0.y;
    let denom = rx * sy - ry * sx;
    if denom.abs() < 1e-15 {
        return None;
    }
    let qx = b0.x - a0.x;
    let qy = b0.y - a0.y;
    let t = (qx * sy - qy * sx) / denom;
    let u = (qx * ry - qy * rx) / denom;
    Some((t, u))
}

/// True if the closed segments properly or improperly intersect.
pub fn segments_intersect(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> bool {
    let d = |p: Point2, q: Point2, r: Point2| (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    let on_seg = |p: Point2, q: Point2, r: Point2| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let d1 = d(b0, b1, a0);
    let d2 = d(b0, b1, a1);
    let d3 = d(a0, a1, b0);
    let d4 = d(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_seg(b0, b1, a0))
        || (d2 == 0.0 && on_seg(b0, b1, a1))
        || (d3 == 0.0 && on_seg(a0, a1, b0))
        || (d4 == 0.0 && on_seg(a0, a1, b1))
}
