use serde::{Deserialize, Serialize};

use super::segment::segments_intersect;
use super::{LineSeg2, Point2};

/// Ordered vertex ring without the closing repeat (closure is implicit).
pub type Ring = Vec<Point2>;

/// Polygon with one exterior ring (counter-clockwise after normalization)
/// and zero or more hole rings (clockwise). Structural validity is graded by
/// the quality module rather than enforced here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2 {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

/// Signed shoelace area; positive for counter-clockwise rings.
pub fn ring_signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        acc += p.x * q.y - q.x * p.y;
    }
    acc / 2.0
}

/// True if any two non-adjacent edges of the ring intersect, or adjacent
/// edges overlap beyond their shared vertex.
pub fn ring_self_intersects(ring: &[Point2]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a0 = ring[i];
        let a1 = ring[(i + 1) % n];
        for j in (i + 1)..n {
            // Adjacent edges share a vertex by construction; skip them.
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let b0 = ring[j];
            let b1 = ring[(j + 1) % n];
            if segments_intersect(a0, a1, b0, b1) {
                return true;
            }
        }
    }
    false
}

impl Polygon2 {
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Self {
        Self { exterior, holes }
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(
            vec![
                Point2::new(x0, y0),
                Point2::new(x1, y0),
                Point2::new(x1, y1),
                Point2::new(x0, y1),
            ],
            Vec::new(),
        )
    }

    /// Reorder rings to canonical orientation: exterior CCW, holes CW.
    /// Area is unchanged. Zero-area rings are left as-is (graded later).
    pub fn normalize_orientation(&mut self) {
        if ring_signed_area(&self.exterior) < 0.0 {
            self.exterior.reverse();
        }
        for h in &mut self.holes {
            if ring_signed_area(h) > 0.0 {
                h.reverse();
            }
        }
    }

    /// Exterior area minus hole areas, in square meters.
    pub fn area(&self) -> f64 {
        let mut a = ring_signed_area(&self.exterior).abs();
        for h in &self.holes {
            a -= ring_signed_area(h).abs();
        }
        a.max(0.0)
    }

    /// Area centroid of the exterior ring.
    pub fn centroid(&self) -> Point2 {
        let ring = &self.exterior;
        let n = ring.len();
        let a = ring_signed_area(ring);
        if n == 0 {
            return Point2::new(0.0, 0.0);
        }
        if a.abs() < 1e-12 {
            // Degenerate ring: fall back to the vertex mean.
            let (mut sx, mut sy) = (0.0, 0.0);
            for p in ring {
                sx += p.x;
                sy += p.y;
            }
            return Point2::new(sx / n as f64, sy / n as f64);
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let p = ring[i];
            let q = ring[(i + 1) % n];
            let cross = p.x * q.y - q.x * p.y;
            cx += (p.x + q.x) * cross;
            cy += (p.y + q.y) * cross;
        }
        Point2::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in self.exterior.iter().chain(self.holes.iter().flatten()) {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        (min, max)
    }

    fn segments(&self) -> impl Iterator<Item = LineSeg2> + '_ {
        ring_segments(&self.exterior).chain(self.holes.iter().flat_map(|h| ring_segments(h)))
    }

    /// Point-in-polygon with boundary counting as inside: true iff `p` is
    /// inside the exterior and not strictly inside any hole. Points on any
    /// ring (within 1e-9 m) count as inside.
    pub fn contains(&self, p: Point2) -> bool {
        for seg in self.segments() {
            if seg.distance_to_point(p) <= super::EPS_COORD {
                return true;
            }
        }
        if !point_in_ring_strict(p, &self.exterior) {
            return false;
        }
        for h in &self.holes {
            if point_in_ring_strict(p, h) {
                return false;
            }
        }
        true
    }

    /// 0 if the point is inside (boundary inclusive), otherwise the minimum
    /// Euclidean distance to the polygon boundary.
    pub fn distance_to_point(&self, p: Point2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.segments()
            .map(|s| s.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Polygon2 {
        let mv = |r: &Ring| -> Ring { r.iter().map(|p| Point2::new(p.x + dx, p.y + dy)).collect() };
        Polygon2::new(mv(&self.exterior), self.holes.iter().map(|h| mv(h)).collect())
    }
}

fn ring_segments(ring: &[Point2]) -> impl Iterator<Item = LineSeg2> + '_ {
    (0..ring.len()).map(move |i| LineSeg2 {
        a: ring[i],
        b: ring[(i + 1) % ring.len()],
    })
}

/// Even-odd crossing test, exclusive of the boundary.
pub fn point_in_ring_strict(p: Point2, ring: &[Point2]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = ring[i];
        let b = ring[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Interior point of a simple ring, robust for non-convex shapes: scan a
/// horizontal line through the ring's vertical midspan and take the midpoint
/// of the widest inside interval.
pub fn ring_interior_point(ring: &[Point2]) -> Point2 {
    let mut ys: Vec<f64> = ring.iter().map(|p| p.y).collect();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();
    // Midpoints between distinct vertex ordinates avoid scanning through
    // vertices, where crossing parity is ambiguous.
    let mut best: Option<(f64, Point2)> = None;
    for w in ys.windows(2) {
        let y = (w[0] + w[1]) / 2.0;
        if (w[1] - w[0]) < 1e-12 {
            continue;
        }
        let mut xs = Vec::new();
        let n = ring.len();
        for i in 0..n {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            if (a.y > y) != (b.y > y) {
                xs.push((b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x);
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut k = 0;
        while k + 1 < xs.len() {
            let width = xs[k + 1] - xs[k];
            let cand = Point2::new((xs[k] + xs[k + 1]) / 2.0, y);
            if best.map_or(true, |(bw, _)| width > bw) {
                best = Some((width, cand));
            }
            k += 2;
        }
    }
    best.map(|(_, p)| p).unwrap_or_else(|| {
        let n = ring.len().max(1) as f64;
        let (mut sx, mut sy) = (0.0, 0.0);
        for p in ring {
            sx += p.x;
            sy += p.y;
        }
        Point2::new(sx / n, sy / n)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon2 {
        Polygon2::rect(0.0, 0.0, 1.0, 1.0)
    }

    fn square_with_hole() -> Polygon2 {
        let mut poly = Polygon2::rect(0.0, 0.0, 1.0, 1.0);
        poly.holes.push(vec![
            Point2::new(0.25, 0.25),
            Point2::new(0.75, 0.25),
            Point2::new(0.75, 0.75),
            Point2::new(0.25, 0.75),
        ]);
        poly.normalize_orientation();
        poly
    }

    #[test]
    fn contains_basic() {
        let sq = unit_square();
        assert!(sq.contains(Point2::new(0.5, 0.5)));
        assert!(!sq.contains(Point2::new(2.0, 2.0)));
        // Boundary counts as inside.
        assert!(sq.contains(Point2::new(0.0, 0.5)));
        assert!(sq.contains(Point2::new(1.0, 1.0)));
    }

    #[test]
    fn contains_respects_holes() {
        let poly = square_with_hole();
        assert!(!poly.contains(Point2::new(0.5, 0.5)));
        assert!(poly.contains(Point2::new(0.1, 0.1)));
        // Hole boundary is part of the polygon.
        assert!(poly.contains(Point2::new(0.25, 0.5)));
    }

    #[test]
    fn contains_matches_crossing_number_oracle() {
        // Brute-force crossing-number oracle over random convex polygons.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            // Random convex polygon: points on a circle at sorted angles.
            let cx = rng.random_range(-5.0..5.0);
            let cy = rng.random_range(-5.0..5.0);
            let r = rng.random_range(0.5..3.0);
            let k = rng.random_range(3..9);
            let mut angs: Vec<f64> = (0..k)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            angs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            angs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            if angs.len() < 3 {
                continue;
            }
            let ring: Ring = angs
                .iter()
                .map(|t| Point2::new(cx + r * t.cos(), cy + r * t.sin()))
                .collect();
            let poly = Polygon2::new(ring.clone(), Vec::new());
            let p = Point2::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            // Oracle: strict crossing number; near-boundary points are skipped
            // because the implementation defines boundary as inside.
            let on_boundary = poly
                .segments()
                .any(|s| s.distance_to_point(p) <= 1e-7);
            if on_boundary {
                continue;
            }
            assert_eq!(poly.contains(p), point_in_ring_strict(p, &ring));
        }
    }

    #[test]
    fn distance_cases() {
        let sq = unit_square();
        assert_eq!(sq.distance_to_point(Point2::new(0.5, 0.5)), 0.0);
        assert!((sq.distance_to_point(Point2::new(2.0, 0.5)) - 1.0).abs() < 1e-12);
        let d = sq.distance_to_point(Point2::new(2.0, 2.0));
        assert!((d - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn areas() {
        assert!((unit_square().area() - 1.0).abs() < 1e-12);
        assert!((square_with_hole().area() - 0.75).abs() < 1e-12);
        let tri = Polygon2::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(0.0, 2.0),
            ],
            Vec::new(),
        );
        assert!((tri.area() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn area_translation_invariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let poly = square_with_hole();
        for _ in 0..50 {
            let t = poly.translated(
                rng.random_range(-1e4..1e4),
                rng.random_range(-1e4..1e4),
            );
            assert!((t.area() - poly.area()).abs() < 1e-6);
        }
    }

    #[test]
    fn self_intersection_bowtie() {
        let bowtie = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(ring_self_intersects(&bowtie));
        assert!(!ring_self_intersects(&unit_square().exterior));
    }

    #[test]
    fn interior_point_nonconvex() {
        // U shape whose centroid falls in the notch.
        let u = vec![
            Point2::new(0.0, 0.0),
            Point2::new(5.0, 0.0),
            Point2::new(5.0, 5.0),
            Point2::new(4.0, 5.0),
            Point2::new(4.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 5.0),
            Point2::new(0.0, 5.0),
        ];
        let p = ring_interior_point(&u);
        assert!(point_in_ring_strict(p, &u), "{p:?} not inside U ring");
    }
}
