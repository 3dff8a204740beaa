//! 2D line candidates for the roof partition: alpha-shape boundary lines of
//! each roof region plus intersection lines between adjacent non-parallel
//! roof planes, followed by regularization that merges duplicates (a gable
//! ridge is typically seen three times: one intersection line and one
//! boundary line per incident plane).

pub mod alpha;

use thiserror::Error;

use crate::geom::{LineSeg2, Point2, Point3};
use crate::planes::PlaneRegion;

#[derive(Debug, Error)]
pub enum LineError {
    #[error("degenerate region: {0}")]
    DegenerateRegion(String),
    #[error("empty input")]
    EmptyInput,
}

/// Where a candidate line came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineOrigin {
    Boundary,
    Intersection,
}

#[derive(Debug, Clone)]
pub struct CandidateLine {
    pub seg: LineSeg2,
    pub origin: LineOrigin,
    /// One region id for boundary lines, two for intersection lines.
    pub source_regions: Vec<usize>,
}

/// Line extraction and regularization parameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LineConfig {
    /// Alpha-shape parameter: max squared circumradius, m2.
    pub alpha: f64,
    /// Orientation clustering tolerance, degrees.
    pub angle_tol: f64,
    /// Offset clustering tolerance / boundary fit tolerance, meters.
    pub dist_tol: f64,
    /// Max gap between member point sets for two regions to count as
    /// adjacent, meters.
    pub adjacency_gap: f64,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            angle_tol: 5.0,
            dist_tol: 0.5,
            adjacency_gap: 0.75,
        }
    }
}

impl LineConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("angle_tol", self.angle_tol),
            ("dist_tol", self.dist_tol),
            ("adjacency_gap", self.adjacency_gap),
        ] {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        Ok(())
    }
}

/// Minimum emitted line length, meters.
const MIN_LINE_LEN: f64 = 0.1;

/// Boundary lines of a roof region: alpha-shape of the members projected to
/// 2D, boundary loops split into maximal straight runs at corners and
/// wherever the chord deviation exceeds dist_tol/2, each run fitted with a
/// least-squares line.
pub fn boundary_lines(
    region_id: usize,
    region: &PlaneRegion,
    roof_points: &[Point3],
    cfg: &LineConfig,
) -> Result<Vec<CandidateLine>, LineError> {
    let pts2: Vec<Point2> = region
        .member_indices
        .iter()
        .map(|&i| roof_points[i].xy())
        .collect();

    // Vertical regions project to a line; reject them by 2D covariance rank.
    let spread = min_spread_2d(&pts2);
    if spread < 1e-6 {
        return Err(LineError::DegenerateRegion(format!(
            "region {region_id}: projected spread {spread:.2e} m"
        )));
    }

    let loops = alpha::alpha_shape_loops(&pts2, cfg.alpha);
    let mut out = Vec::new();
    for lp in loops {
        let ring: Vec<Point2> = lp.iter().map(|&i| pts2[i]).collect();
        for run in split_runs(&ring, cfg) {
            if let Some(seg) = fit_segment(&run) {
                if seg.length() > MIN_LINE_LEN {
                    out.push(CandidateLine {
                        seg,
                        origin: LineOrigin::Boundary,
                        source_regions: vec![region_id],
                    });
                }
            }
        }
    }
    Ok(out)
}

fn min_spread_2d(pts: &[Point2]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 3 {
        return 0.0;
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in pts {
        cx += p.x;
        cy += p.y;
    }
    cx /= n;
    cy /= n;
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for p in pts {
        let dx = p.x - cx;
        let dy = p.y - cy;
        xx += dx * dx;
        xy += dx * dy;
        yy += dy * dy;
    }
    xx /= n;
    xy /= n;
    yy /= n;
    let tr = xx + yy;
    let det = xx * yy - xy * xy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 - disc).max(0.0).sqrt()
}

/// Split a closed boundary loop into straight runs. Corners are local maxima
/// of the turn angle between a short back-chord and forward-chord; runs
/// between corners are subdivided wherever a point deviates more than
/// dist_tol/2 from the run chord. Chord-based turns tolerate the staircase
/// patterns that grid-sampled diagonal edges produce.
fn split_runs(ring: &[Point2], cfg: &LineConfig) -> Vec<Vec<Point2>> {
    let m = ring.len();
    if m < 3 {
        return Vec::new();
    }
    // Canonical start keeps output independent of loop phase.
    let start = (0..m)
        .min_by(|&a, &b| {
            ring[a]
                .x
                .partial_cmp(&ring[b].x)
                .unwrap()
                .then(ring[a].y.partial_cmp(&ring[b].y).unwrap())
        })
        .unwrap();
    let ring: Vec<Point2> = (0..m).map(|i| ring[(start + i) % m]).collect();

    let lookahead = (m / 3).clamp(1, 3);
    let turn = |k: usize| -> f64 {
        let prev = ring[(k + m - lookahead) % m];
        let cur = ring[k];
        let next = ring[(k + lookahead) % m];
        let a1 = (cur.y - prev.y).atan2(cur.x - prev.x);
        let a2 = (next.y - cur.y).atan2(next.x - cur.x);
        let mut d = (a2 - a1).abs();
        if d > std::f64::consts::PI {
            d = std::f64::consts::TAU - d;
        }
        d.to_degrees()
    };
    let turns: Vec<f64> = (0..m).map(turn).collect();
    let mut corners: Vec<usize> = (0..m)
        .filter(|&k| {
            if turns[k] <= cfg.angle_tol {
                return false;
            }
            // Non-max suppression within the lookahead window; earlier index
            // wins on plateaus.
            for off in 1..=lookahead {
                if turns[(k + m - off) % m] >= turns[k] {
                    return false;
                }
                if turns[(k + off) % m] > turns[k] {
                    return false;
                }
            }
            true
        })
        .collect();
    if corners.is_empty() {
        corners.push(0);
    }

    let mut runs = Vec::new();
    let nc = corners.len();
    for ci in 0..nc {
        let from = corners[ci];
        let to = corners[(ci + 1) % nc];
        let len = if nc == 1 {
            m
        } else {
            (to + m - from) % m
        };
        if len == 0 {
            continue;
        }
        let pts: Vec<Point2> = (0..=len).map(|off| ring[(from + off) % m]).collect();
        subdivide_run(&pts, cfg.dist_tol / 2.0, &mut runs);
    }
    runs
}

/// Recursively split a point run at its worst chord deviation until every
/// interior point is within `tol` of the chord.
fn subdivide_run(pts: &[Point2], tol: f64, out: &mut Vec<Vec<Point2>>) {
    if pts.len() < 2 {
        return;
    }
    let a = pts[0];
    let b = pts[pts.len() - 1];
    let chord = if a.distance(b) > 1e-12 {
        Some(LineSeg2::new(a, b))
    } else {
        None
    };
    let mut worst = 0.0;
    let mut worst_i = 0;
    for (i, p) in pts.iter().enumerate().skip(1).take(pts.len().saturating_sub(2)) {
        let d = match &chord {
            Some(seg) => seg.distance_to_point(*p),
            None => a.distance(*p),
        };
        if d > worst {
            worst = d;
            worst_i = i;
        }
    }
    if worst > tol && worst_i > 0 {
        subdivide_run(&pts[..=worst_i], tol, out);
        subdivide_run(&pts[worst_i..], tol, out);
    } else {
        out.push(pts.to_vec());
    }
}

/// Least-squares line through the run, clipped to the run extent.
fn fit_segment(pts: &[Point2]) -> Option<LineSeg2> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in pts {
        cx += p.x;
        cy += p.y;
    }
    cx /= n;
    cy /= n;
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for p in pts {
        let dx = p.x - cx;
        let dy = p.y - cy;
        xx += dx * dx;
        xy += dx * dy;
        yy += dy * dy;
    }
    // Principal axis of the 2x2 covariance.
    let tr = xx + yy;
    let disc = ((xx - yy) * (xx - yy) / 4.0 + xy * xy).max(0.0).sqrt();
    let l1 = tr / 2.0 + disc;
    let (dx, dy) = if xy.abs() > 1e-18 {
        (l1 - yy, xy)
    } else if xx >= yy {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let len = (dx * dx + dy * dy).sqrt();
    if len < 1e-18 {
        return None;
    }
    let (dx, dy) = (dx / len, dy / len);
    let mut tmin = f64::INFINITY;
    let mut tmax = f64::NEG_INFINITY;
    for p in pts {
        let t = (p.x - cx) * dx + (p.y - cy) * dy;
        tmin = tmin.min(t);
        tmax = tmax.max(t);
    }
    if tmax - tmin < 1e-9 {
        return None;
    }
    Some(LineSeg2::new(
        Point2::new(cx + tmin * dx, cy + tmin * dy),
        Point2::new(cx + tmax * dx, cy + tmax * dy),
    ))
}

/// Intersection line between two adjacent, non-parallel roof planes,
/// projected to 2D and clipped to the union bbox of the member points
/// inflated by dist_tol. Returns None when the regions are not adjacent
/// (member gap > adjacency_gap) or the planes are parallel within angle_tol.
pub fn intersection_line(
    id_a: usize,
    a: &PlaneRegion,
    id_b: usize,
    b: &PlaneRegion,
    roof_points: &[Point3],
    cfg: &LineConfig,
) -> Option<CandidateLine> {
    if a.plane.normal_angle_degrees(&b.plane).min(
        180.0 - a.plane.normal_angle_degrees(&b.plane),
    ) <= cfg.angle_tol
    {
        return None;
    }
    if !regions_adjacent(a, b, roof_points, cfg.adjacency_gap) {
        return None;
    }
    // Equal-height locus of the two planes in the xy plane:
    // (naz*nbx - nbz*nax) x + (naz*nby - nbz*nay) y = naz*ob - nbz*oa.
    let na = a.plane.normal;
    let nb = b.plane.normal;
    let ca = (na[2] * nb[0] - nb[2] * na[0], na[2] * nb[1] - nb[2] * na[1]);
    let rhs = na[2] * b.plane.offset - nb[2] * a.plane.offset;
    let norm = (ca.0 * ca.0 + ca.1 * ca.1).sqrt();
    if norm < 1e-12 {
        return None;
    }
    let (nx, ny, c) = (ca.0 / norm, ca.1 / norm, rhs / norm);

    // Clip the infinite line nx*x + ny*y = c to the inflated union bbox.
    let (mut lo, mut hi) = (
        Point2::new(f64::INFINITY, f64::INFINITY),
        Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for &i in a.member_indices.iter().chain(b.member_indices.iter()) {
        let p = roof_points[i];
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    lo.x -= cfg.dist_tol;
    lo.y -= cfg.dist_tol;
    hi.x += cfg.dist_tol;
    hi.y += cfg.dist_tol;
    let origin = Point2::new(nx * c, ny * c);
    let dir = (-ny, nx);
    let mut tmin = f64::NEG_INFINITY;
    let mut tmax = f64::INFINITY;
    for (o, d, l, h) in [
        (origin.x, dir.0, lo.x, hi.x),
        (origin.y, dir.1, lo.y, hi.y),
    ] {
        if d.abs() < 1e-15 {
            if o < l || o > h {
                return None;
            }
        } else {
            let t1 = (l - o) / d;
            let t2 = (h - o) / d;
            tmin = tmin.max(t1.min(t2));
            tmax = tmax.min(t1.max(t2));
        }
    }
    if !(tmax - tmin > MIN_LINE_LEN) {
        return None;
    }
    Some(CandidateLine {
        seg: LineSeg2::new(
            Point2::new(origin.x + tmin * dir.0, origin.y + tmin * dir.1),
            Point2::new(origin.x + tmax * dir.0, origin.y + tmax * dir.1),
        ),
        origin: LineOrigin::Intersection,
        source_regions: vec![id_a.min(id_b), id_a.max(id_b)],
    })
}

fn regions_adjacent(
    a: &PlaneRegion,
    b: &PlaneRegion,
    roof_points: &[Point3],
    gap: f64,
) -> bool {
    // Bbox prefilter before the quadratic scan.
    let bbox = |r: &PlaneRegion| {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &i in &r.member_indices {
            let p = roof_points[i];
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    };
    let (alo, ahi) = bbox(a);
    let (blo, bhi) = bbox(b);
    if alo.x > bhi.x + gap || blo.x > ahi.x + gap || alo.y > bhi.y + gap || blo.y > ahi.y + gap {
        return false;
    }
    let gap2 = gap * gap;
    for &i in &a.member_indices {
        let p = roof_points[i].xy();
        for &j in &b.member_indices {
            let q = roof_points[j].xy();
            let dx = p.x - q.x;
            let dy = p.y - q.y;
            if dx * dx + dy * dy <= gap2 {
                return true;
            }
        }
    }
    false
}

/// Merge duplicate candidate lines: cluster by undirected orientation
/// (single-linkage, tolerance angle_tol), snap each cluster to its
/// length-weighted mean direction, sub-cluster by perpendicular offset with
/// single-linkage gap dist_tol, and collapse each sub-cluster to a
/// representative at the weighted mean offset. Intersection-origin lines
/// carry double weight in the offset mean.
pub fn regularize_lines(lines: &[CandidateLine], cfg: &LineConfig) -> Result<Vec<LineSeg2>, LineError> {
    if lines.is_empty() {
        return Err(LineError::EmptyInput);
    }
    let n = lines.len();
    let angles: Vec<f64> = lines.iter().map(|l| l.seg.direction_angle()).collect();
    // Single-linkage orientation clustering via union-find.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (angles[i] - angles[j]).abs();
            let d = d.min(std::f64::consts::PI - d);
            if d.to_degrees() <= cfg.angle_tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        clusters.entry(r).or_default().push(i);
    }

    let mut reps: Vec<(f64, f64, LineSeg2)> = Vec::new();
    for members in clusters.values() {
        // Length-weighted circular mean via doubled angles.
        let (mut sx, mut sy) = (0.0, 0.0);
        for &i in members {
            let w = lines[i].seg.length();
            sx += w * (2.0 * angles[i]).cos();
            sy += w * (2.0 * angles[i]).sin();
        }
        let mut theta = 0.5 * sy.atan2(sx);
        if theta < 0.0 {
            theta += std::f64::consts::PI;
        }
        if theta >= std::f64::consts::PI {
            theta -= std::f64::consts::PI;
        }
        let dir = (theta.cos(), theta.sin());
        let nrm = (-dir.1, dir.0);

        // Perpendicular offset of each member line (via its midpoint), and
        // extent along the snapped direction.
        let mut items: Vec<(f64, usize)> = members
            .iter()
            .map(|&i| {
                let m = Point2::new(
                    (lines[i].seg.a.x + lines[i].seg.b.x) / 2.0,
                    (lines[i].seg.a.y + lines[i].seg.b.y) / 2.0,
                );
                (m.x * nrm.0 + m.y * nrm.1, i)
            })
            .collect();
        items.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        let mut group: Vec<(f64, usize)> = Vec::new();
        let mut flush = |group: &mut Vec<(f64, usize)>, reps: &mut Vec<(f64, f64, LineSeg2)>| {
            if group.is_empty() {
                return;
            }
            let mut wsum = 0.0;
            let mut osum = 0.0;
            let mut tmin = f64::INFINITY;
            let mut tmax = f64::NEG_INFINITY;
            for &(off, i) in group.iter() {
                let w = lines[i].seg.length()
                    * if lines[i].origin == LineOrigin::Intersection { 2.0 } else { 1.0 };
                wsum += w;
                osum += w * off;
                for p in [lines[i].seg.a, lines[i].seg.b] {
                    let t = p.x * dir.0 + p.y * dir.1;
                    tmin = tmin.min(t);
                    tmax = tmax.max(t);
                }
            }
            let off = osum / wsum;
            if tmax - tmin > 1e-9 {
                let a = Point2::new(tmin * dir.0 + off * nrm.0, tmin * dir.1 + off * nrm.1);
                let b = Point2::new(tmax * dir.0 + off * nrm.0, tmax * dir.1 + off * nrm.1);
                reps.push((theta, off, LineSeg2::new(a, b)));
            }
            group.clear();
        };
        for (off, i) in items {
            if let Some(&(last, _)) = group.last() {
                if off - last > cfg.dist_tol {
                    flush(&mut group, &mut reps);
                }
            }
            group.push((off, i));
        }
        flush(&mut group, &mut reps);
    }
    reps.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    Ok(reps.into_iter().map(|(_, _, s)| s).collect())
}
