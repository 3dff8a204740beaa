//! Planar arrangement of the footprint boundary, its holes and the
//! regularized roof lines extended to full chords. Vertices snap to a 1e-6 m
//! grid; bounded cells inside the footprint become the faces of the initial
//! roof partition.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::geom::{
    chain_loops, line_intersection_params, ring_signed_area, LineSeg2, Point2, Polygon2,
};

/// Snap quantum in meters.
const QUANTUM: f64 = 1e-6;
/// Distance below which a foreign endpoint splits a segment.
const ON_SEGMENT_EPS: f64 = 1.5e-6;

pub fn quantize(p: Point2) -> (i64, i64) {
    ((p.x / QUANTUM).round() as i64, (p.y / QUANTUM).round() as i64)
}

fn unquantize(q: (i64, i64)) -> Point2 {
    Point2::new(q.0 as f64 * QUANTUM, q.1 as f64 * QUANTUM)
}

/// One cell of the arrangement: exterior ring CCW, hole rings CW, vertex ids
/// into `Arrangement::verts`.
#[derive(Debug, Clone)]
pub struct Cell {
    pub exterior: Vec<usize>,
    pub holes: Vec<Vec<usize>>,
}

impl Cell {
    pub fn rings(&self) -> impl Iterator<Item = &Vec<usize>> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }
}

#[derive(Debug, Clone)]
pub struct Arrangement {
    pub verts: Vec<Point2>,
    pub cells: Vec<Cell>,
    /// Directed edge (u, v) -> cell index having the edge on its left.
    pub edge_left: HashMap<(usize, usize), usize>,
}

struct VertexPool {
    verts: Vec<Point2>,
    index: HashMap<(i64, i64), usize>,
}

impl VertexPool {
    fn new() -> Self {
        Self { verts: Vec::new(), index: HashMap::new() }
    }

    fn intern(&mut self, p: Point2) -> usize {
        let q = quantize(p);
        if let Some(&i) = self.index.get(&q) {
            return i;
        }
        let i = self.verts.len();
        self.verts.push(unquantize(q));
        self.index.insert(q, i);
        i
    }
}

/// Extend `line` to the full span of its crossings with the exterior ring.
/// Returns None when the supporting line has fewer than two crossings.
pub fn full_chord(line: &LineSeg2, exterior: &[Point2]) -> Option<LineSeg2> {
    let dir = Point2::new(line.b.x - line.a.x, line.b.y - line.a.y);
    let n = exterior.len();
    let mut ts: Vec<f64> = Vec::new();
    for i in 0..n {
        let e0 = exterior[i];
        let e1 = exterior[(i + 1) % n];
        if let Some((t, u)) = line_intersection_params(line.a, line.b, e0, e1) {
            if (-1e-9..=1.0 + 1e-9).contains(&u) {
                ts.push(t);
            }
        }
    }
    if ts.len() < 2 {
        return None;
    }
    let lo = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-9 {
        return None;
    }
    Some(LineSeg2::new(
        Point2::new(line.a.x + lo * dir.x, line.a.y + lo * dir.y),
        Point2::new(line.a.x + hi * dir.x, line.a.y + hi * dir.y),
    ))
}

/// Build the arrangement of the footprint rings plus the chords of `lines`,
/// keeping only cells whose interior lies inside the footprint.
pub fn build(footprint: &Polygon2, lines: &[LineSeg2]) -> Arrangement {
    let mut segments: Vec<(Point2, Point2)> = Vec::new();
    let mut push_ring = |segments: &mut Vec<(Point2, Point2)>, ring: &[Point2]| {
        let n = ring.len();
        for i in 0..n {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            if a.distance(b) > QUANTUM {
                segments.push((a, b));
            }
        }
    };
    push_ring(&mut segments, &footprint.exterior);
    for h in &footprint.holes {
        push_ring(&mut segments, h);
    }
    for line in lines {
        if let Some(chord) = full_chord(line, &footprint.exterior) {
            segments.push((chord.a, chord.b));
        }
    }

    let mut pool = VertexPool::new();
    // Split every segment at proper intersections and at foreign endpoints
    // lying on it, then emit quantized sub-edges.
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, &(a, b)) in segments.iter().enumerate() {
        let seg = LineSeg2::new(a, b);
        let mut cuts: Vec<(f64, Point2)> = vec![(0.0, a), (1.0, b)];
        for (j, &(c, d)) in segments.iter().enumerate() {
            if i == j {
                continue;
            }
            if let Some((t, u)) = line_intersection_params(a, b, c, d) {
                if (-1e-9..=1.0 + 1e-9).contains(&t) && (-1e-9..=1.0 + 1e-9).contains(&u) {
                    cuts.push((
                        t.clamp(0.0, 1.0),
                        Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)),
                    ));
                }
            }
            // Collinear overlaps and T-junctions: split at foreign endpoints.
            for p in [c, d] {
                if seg.distance_to_point(p) <= ON_SEGMENT_EPS {
                    let vx = b.x - a.x;
                    let vy = b.y - a.y;
                    let len2 = vx * vx + vy * vy;
                    let t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2;
                    if (-1e-9..=1.0 + 1e-9).contains(&t) {
                        cuts.push((t.clamp(0.0, 1.0), p));
                    }
                }
            }
        }
        cuts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let ids: Vec<usize> = cuts.iter().map(|&(_, p)| pool.intern(p)).collect();
        for w in ids.windows(2) {
            if w[0] != w[1] {
                edges.insert((w[0].min(w[1]), w[0].max(w[1])));
            }
        }
    }

    let verts = pool.verts;
    // CCW-sorted neighbor lists.
    let mut nbrs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, v) in &edges {
        nbrs.entry(u).or_default().push(v);
        nbrs.entry(v).or_default().push(u);
    }
    for (u, list) in nbrs.iter_mut() {
        let pu = verts[*u];
        list.sort_by(|&a, &b| {
            let ta = (verts[a].y - pu.y).atan2(verts[a].x - pu.x);
            let tb = (verts[b].y - pu.y).atan2(verts[b].x - pu.x);
            ta.partial_cmp(&tb).unwrap().then(a.cmp(&b))
        });
        list.dedup();
    }

    // Face walk: next directed edge after (u, v) is (v, w) where w precedes
    // u in the CCW neighbor order of v. Bounded faces trace CCW.
    let next_edge = |u: usize, v: usize| -> (usize, usize) {
        let list = &nbrs[&v];
        let idx = list.iter().position(|&w| w == u).unwrap();
        let w = list[(idx + list.len() - 1) % list.len()];
        (v, w)
    };

    let mut visited: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut pos_cycles: Vec<Vec<usize>> = Vec::new();
    let mut neg_cycles: Vec<Vec<usize>> = Vec::new();
    let mut directed: Vec<(usize, usize)> = Vec::new();
    for &(u, v) in &edges {
        directed.push((u, v));
        directed.push((v, u));
    }
    for &(su, sv) in &directed {
        if visited.contains(&(su, sv)) {
            continue;
        }
        let mut cyc: Vec<usize> = Vec::new();
        let (mut u, mut v) = (su, sv);
        loop {
            visited.insert((u, v));
            cyc.push(u);
            let (nu, nv) = next_edge(u, v);
            u = nu;
            v = nv;
            if (u, v) == (su, sv) {
                break;
            }
            if cyc.len() > directed.len() {
                break; // safety
            }
        }
        if cyc.len() < 3 {
            continue;
        }
        let ring: Vec<Point2> = cyc.iter().map(|&i| verts[i]).collect();
        let area = ring_signed_area(&ring);
        if area > 0.0 {
            pos_cycles.push(cyc);
        } else if area < 0.0 {
            neg_cycles.push(cyc);
        }
    }

    // Assign hole cycles to the smallest positive cycle containing a probe
    // point just left of their longest edge.
    let pos_rings: Vec<Vec<Point2>> = pos_cycles
        .iter()
        .map(|c| c.iter().map(|&i| verts[i]).collect())
        .collect();
    let pos_areas: Vec<f64> = pos_rings.iter().map(|r| ring_signed_area(r)).collect();
    let mut cell_holes: Vec<Vec<Vec<usize>>> = vec![Vec::new(); pos_cycles.len()];
    for neg in neg_cycles {
        let m = neg.len();
        let mut best_edge = 0usize;
        let mut best_len = -1.0;
        for k in 0..m {
            let l = verts[neg[k]].distance(verts[neg[(k + 1) % m]]);
            if l > best_len {
                best_len = l;
                best_edge = k;
            }
        }
        let a = verts[neg[best_edge]];
        let b = verts[neg[(best_edge + 1) % m]];
        let mid = Point2::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
        let len = a.distance(b);
        let delta = (len * 1e-3).min(1e-4).max(1e-9);
        let left = Point2::new(-(b.y - a.y) / len, (b.x - a.x) / len);
        let probe = Point2::new(mid.x + delta * left.x, mid.y + delta * left.y);
        let mut best: Option<usize> = None;
        for (ci, ring) in pos_rings.iter().enumerate() {
            if crate::geom::point_in_ring_strict(probe, ring)
                && best.map_or(true, |b| pos_areas[ci] < pos_areas[b])
            {
                best = Some(ci);
            }
        }
        if let Some(ci) = best {
            cell_holes[ci].push(neg);
        }
        // Unbounded-face boundaries land nowhere and are dropped.
    }

    // Keep cells whose interior point is inside the footprint.
    let mut cells: Vec<Cell> = Vec::new();
    for (ci, cyc) in pos_cycles.into_iter().enumerate() {
        let cell = Cell { exterior: cyc, holes: std::mem::take(&mut cell_holes[ci]) };
        let probe = cell_interior_point(&verts, &cell);
        if footprint.contains(probe) {
            cells.push(cell);
        }
    }

    // Canonical cell order: rotate rings to start at their smallest vertex
    // id, then sort cells lexicographically. Output becomes independent of
    // traversal order.
    for cell in &mut cells {
        rotate_to_min(&mut cell.exterior);
        for h in &mut cell.holes {
            rotate_to_min(h);
        }
        cell.holes.sort();
    }
    cells.sort_by(|a, b| a.exterior.cmp(&b.exterior));

    let mut edge_left = HashMap::new();
    for (ci, cell) in cells.iter().enumerate() {
        for ring in cell.rings() {
            let n = ring.len();
            for k in 0..n {
                edge_left.insert((ring[k], ring[(k + 1) % n]), ci);
            }
        }
    }

    Arrangement { verts, cells, edge_left }
}

fn rotate_to_min(ring: &mut Vec<usize>) {
    if ring.is_empty() {
        return;
    }
    let k = ring
        .iter()
        .enumerate()
        .min_by_key(|&(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap();
    ring.rotate_left(k);
}

/// Interior point of a cell accounting for its holes: horizontal scanline
/// through candidate midspans, widest inside interval wins.
pub fn cell_interior_point(verts: &[Point2], cell: &Cell) -> Point2 {
    let mut ys: Vec<f64> = cell
        .rings()
        .flat_map(|r| r.iter().map(|&i| verts[i].y))
        .collect();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();
    let mut best: Option<(f64, Point2)> = None;
    for w in ys.windows(2) {
        if w[1] - w[0] < 1e-12 {
            continue;
        }
        let y = (w[0] + w[1]) / 2.0;
        let mut xs: Vec<f64> = Vec::new();
        for ring in cell.rings() {
            let n = ring.len();
            for k in 0..n {
                let a = verts[ring[k]];
                let b = verts[ring[(k + 1) % n]];
                if (a.y > y) != (b.y > y) {
                    xs.push((b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x);
                }
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut k = 0;
        while k + 1 < xs.len() {
            let width = xs[k + 1] - xs[k];
            if best.map_or(true, |(bw, _)| width > bw) {
                best = Some((width, Point2::new((xs[k] + xs[k + 1]) / 2.0, y)));
            }
            k += 2;
        }
    }
    best.map(|(_, p)| p).unwrap_or_else(|| {
        let ring = &cell.exterior;
        let n = ring.len().max(1) as f64;
        let (mut sx, mut sy) = (0.0, 0.0);
        for &i in ring {
            sx += verts[i].x;
            sy += verts[i].y;
        }
        Point2::new(sx / n, sy / n)
    })
}
