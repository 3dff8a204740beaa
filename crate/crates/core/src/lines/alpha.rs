//! Alpha-shape boundary extraction on top of a Delaunay triangulation.
//!
//! A triangle belongs to the alpha complex iff its squared circumradius is
//! at most alpha (alpha carries m2 of squared radius). Boundary edges are
//! the edges used by exactly one complex triangle, oriented with the complex
//! on their left, and are chained into closed loops: exterior loops run
//! counter-clockwise, hole loops clockwise.

use crate::geom::{chain_loops, Point2};

/// Closed boundary loop as indices into the input point slice.
pub type Loop = Vec<usize>;

fn circumradius_sq(a: Point2, b: Point2, c: Point2) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let ex = c.x - a.x;
    let ey = c.y - a.y;
    let bl = dx * dx + dy * dy;
    let cl = ex * ex + ey * ey;
    let d = dx * ey - dy * ex;
    if d.abs() < 1e-30 {
        return f64::INFINITY;
    }
    let x = (ey * bl - dy * cl) * 0.5 / d;
    let y = (dx * cl - ex * bl) * 0.5 / d;
    x * x + y * y
}

fn next_halfedge(e: usize) -> usize {
    if e % 3 == 2 {
        e - 2
    } else {
        e + 1
    }
}

/// Boundary loops of the alpha shape of `points`. Returns an empty list when
/// fewer than 3 points are given or no triangle passes the alpha filter.
pub fn alpha_shape_loops(points: &[Point2], alpha: f64) -> Vec<Loop> {
    if points.len() < 3 {
        return Vec::new();
    }
    let dpoints: Vec<delaunator::Point> = points
        .iter()
        .map(|p| delaunator::Point { x: p.x, y: p.y })
        .collect();
    let tri = delaunator::triangulate(&dpoints);
    let n_tri = tri.triangles.len() / 3;
    if n_tri == 0 {
        return Vec::new();
    }
    let mut keep = vec![false; n_tri];
    for t in 0..n_tri {
        let a = points[tri.triangles[3 * t]];
        let b = points[tri.triangles[3 * t + 1]];
        let c = points[tri.triangles[3 * t + 2]];
        keep[t] = circumradius_sq(a, b, c) <= alpha;
    }

    // Directed boundary edges (u -> v) with the alpha complex on the left.
    let mut boundary: Vec<(usize, usize)> = Vec::new();
    for e in 0..tri.triangles.len() {
        if !keep[e / 3] {
            continue;
        }
        let twin = tri.halfedges[e];
        let exposed = twin == delaunator::EMPTY || !keep[twin / 3];
        if exposed {
            // delaunator triangles wind clockwise in a y-up frame; reverse
            // the edge so the kept complex sits on the left.
            boundary.push((tri.triangles[next_halfedge(e)], tri.triangles[e]));
        }
    }
    chain_loops(points, boundary)
}
