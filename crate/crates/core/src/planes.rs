//! Roof-plane detection: segment a building's roof-candidate points into
//! planar regions by region growing, then split the regions into roof and
//! wall classes. Points that end up in no region are simply not referenced.

use thiserror::Error;

use crate::geom::{fit_plane, point_plane_distance, GeomError, Plane, Point3};
use crate::ingest::BuildingPoints;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// Region-growing parameters. Defaults target ~8 pts/m2 aerial lidar with
/// ~10 cm height accuracy.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    /// Minimum member count for an accepted region (~2 m2 roof element).
    pub min_points: usize,
    /// Max orthogonal distance to the running region plane, meters.
    pub dist_epsilon: f64,
    /// Max angle between a point normal and the region plane normal, degrees.
    pub normal_angle_max: f64,
    /// Neighborhood size for normal estimation and growth.
    pub k_neighbors: usize,
    /// Regions tilted beyond this angle from vertical are walls, degrees.
    pub wall_angle_min: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            min_points: 15,
            dist_epsilon: 0.15,
            normal_angle_max: 20.0,
            k_neighbors: 10,
            wall_angle_min: 75.0,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_points < 3 {
            return Err("min_points must be >= 3".into());
        }
        if !(self.dist_epsilon > 0.0) {
            return Err("dist_epsilon must be positive".into());
        }
        if !(self.normal_angle_max > 0.0 && self.normal_angle_max < 90.0) {
            return Err("normal_angle_max must be in (0, 90)".into());
        }
        if self.k_neighbors < 3 {
            return Err("k_neighbors must be >= 3".into());
        }
        if !(self.wall_angle_min > 0.0 && self.wall_angle_min < 90.0) {
            return Err("wall_angle_min must be in (0, 90)".into());
        }
        Ok(())
    }
}

/// Classification of a detected planar region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Roof,
    Wall,
}

/// A detected planar segment.
#[derive(Debug, Clone)]
pub struct PlaneRegion {
    pub plane: Plane,
    /// Indices into `BuildingPoints::roof_candidates`, ascending.
    pub member_indices: Vec<usize>,
    pub kind: RegionKind,
}

/// Uniform-grid k-nearest-neighbor index over one building's points.
/// Cells are sized to the mean point spacing; queries expand rings of cells
/// until the k-th best distance is covered.
struct GridKnn<'a> {
    points: &'a [Point3],
    min_x: f64,
    min_y: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl<'a> GridKnn<'a> {
    fn new(points: &'a [Point3]) -> Self {
        let mut min_x = f64::INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let w = (max_x - min_x).max(1e-6);
        let h = (max_y - min_y).max(1e-6);
        let cell = ((w * h / points.len().max(1) as f64).sqrt()).max(1e-6);
        let nx = ((w / cell).ceil() as usize + 1).max(1);
        let ny = ((h / cell).ceil() as usize + 1).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        for (i, p) in points.iter().enumerate() {
            let cx = (((p.x - min_x) / cell) as usize).min(nx - 1);
            let cy = (((p.y - min_y) / cell) as usize).min(ny - 1);
            cells[cy * nx + cx].push(i as u32);
        }
        Self { points, min_x, min_y, cell, nx, ny, cells }
    }

    /// Indices of the k nearest points to `points[query]`, excluding the
    /// query itself. Ties are broken by index so results are deterministic.
    fn knn(&self, query: usize, k: usize) -> Vec<usize> {
        let qp = self.points[query];
        let qx = (((qp.x - self.min_x) / self.cell) as usize).min(self.nx - 1);
        let qy = (((qp.y - self.min_y) / self.cell) as usize).min(self.ny - 1);
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let mut ring = 0usize;
        loop {
            let mut any_cell = false;
            for cy in qy.saturating_sub(ring)..=(qy + ring).min(self.ny - 1) {
                for cx in qx.saturating_sub(ring)..=(qx + ring).min(self.nx - 1) {
                    // Only the new ring boundary.
                    let on_ring = cx == qx.saturating_sub(ring)
                        || cx == (qx + ring).min(self.nx - 1)
                        || cy == qy.saturating_sub(ring)
                        || cy == (qy + ring).min(self.ny - 1);
                    if ring > 0 && !on_ring {
                        continue;
                    }
                    any_cell = true;
                    for &pi in &self.cells[cy * self.nx + cx] {
                        let pi = pi as usize;
                        if pi == query {
                            continue;
                        }
                        let d = qp.distance(self.points[pi]);
                        best.push((d, pi));
                    }
                }
            }
            if !any_cell && ring > self.nx + self.ny {
                break;
            }
            // The k-th candidate is final once the unexplored area is
            // farther than its distance (xy distance lower-bounds 3D).
            if best.len() >= k {
                best.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                best.truncate(k.max(1) * 4);
                let kth = best[k - 1].0;
                let covered = ring as f64 * self.cell;
                if covered >= kth {
                    break;
                }
            }
            ring += 1;
            if ring > self.nx + self.ny {
                break;
            }
        }
        best.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        best.truncate(k);
        best.into_iter().map(|(_, i)| i).collect()
    }
}

/// Covariance accumulator for incremental plane refits.
#[derive(Clone, Default)]
struct PlaneAccum {
    n: f64,
    sum: [f64; 3],
    // Upper triangle of sum of outer products.
    xx: f64,
    xy: f64,
    xz: f64,
    yy: f64,
    yz: f64,
    zz: f64,
}

impl PlaneAccum {
    fn add(&mut self, p: Point3) {
        self.n += 1.0;
        self.sum[0] += p.x;
        self.sum[1] += p.y;
        self.sum[2] += p.z;
        self.xx += p.x * p.x;
        self.xy += p.x * p.y;
        self.xz += p.x * p.z;
        self.yy += p.y * p.y;
        self.yz += p.y * p.z;
        self.zz += p.z * p.z;
    }

    fn fit(&self) -> Option<Plane> {
        if self.n < 3.0 {
            return None;
        }
        let n = self.n;
        let c = [self.sum[0] / n, self.sum[1] / n, self.sum[2] / n];
        let m = nalgebra::Matrix3::new(
            self.xx / n - c[0] * c[0],
            self.xy / n - c[0] * c[1],
            self.xz / n - c[0] * c[2],
            self.xy / n - c[0] * c[1],
            self.yy / n - c[1] * c[1],
            self.yz / n - c[1] * c[2],
            self.xz / n - c[0] * c[2],
            self.yz / n - c[1] * c[2],
            self.zz / n - c[2] * c[2],
        );
        let eig = nalgebra::SymmetricEigen::new(m);
        let mut min_i = 0;
        for i in 1..3 {
            if eig.eigenvalues[i] < eig.eigenvalues[min_i] {
                min_i = i;
            }
        }
        let mut evs = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let max_ev = evs[2].max(0.0);
        if max_ev <= 0.0 || evs[1] <= max_ev * 1e-12 {
            return None;
        }
        let nv = eig.eigenvectors.column(min_i);
        let offset = nv[0] * c[0] + nv[1] * c[1] + nv[2] * c[2];
        Some(Plane::new([nv[0], nv[1], nv[2]], offset))
    }
}

/// Per-point normals from the covariance of each point's k nearest neighbors
/// plus itself, in canonical orientation. Fails when fewer than k+1 points
/// exist.
pub fn estimate_normals(points: &[Point3], k: usize) -> Result<Vec<[f64; 3]>, DetectError> {
    if points.len() < k + 1 {
        return Err(DetectError::DegenerateInput(format!(
            "normal estimation needs >= {} points, got {}",
            k + 1,
            points.len()
        )));
    }
    let grid = GridKnn::new(points);
    let mut normals = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        let nbrs = grid.knn(i, k);
        let mut acc = PlaneAccum::default();
        acc.add(points[i]);
        for &j in &nbrs {
            acc.add(points[j]);
        }
        match acc.fit() {
            Some(pl) => normals.push(pl.normal),
            // Collinear neighborhood: no usable normal; mark with zero.
            None => normals.push([0.0, 0.0, 0.0]),
        }
    }
    Ok(normals)
}

/// Mean squared orthogonal distance of a point's neighborhood to its local
/// plane: the seed-ordering residual. Lower residual means flatter
/// neighborhoods, which are grown first.
fn local_residuals(points: &[Point3], grid: &GridKnn, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        let nbrs = grid.knn(i, k);
        let mut acc = PlaneAccum::default();
        acc.add(points[i]);
        for &j in &nbrs {
            acc.add(points[j]);
        }
        match acc.fit() {
            Some(pl) => {
                let mut s = 0.0;
                let mut n = 0.0;
                let mut each = |p: Point3| {
                    let d = point_plane_distance(p, &pl);
                    s += d * d;
                    n += 1.0;
                };
                each(points[i]);
                for &j in &nbrs {
                    each(points[j]);
                }
                out.push(s / n);
            }
            None => out.push(f64::INFINITY),
        }
    }
    out
}

/// Deterministic region growing over the roof candidates.
///
/// The computation runs in a canonical point order (ascending (x, y, z)), so
/// the resulting member sets are independent of input point order. Seeds are
/// visited in ascending order of local plane residual; a candidate joins a
/// region iff its distance to the running least-squares plane stays within
/// `dist_epsilon` and its normal stays within `normal_angle_max` of the
/// region plane. Accepted regions are refit with a full least-squares fit.
pub fn detect_planes(pts: &BuildingPoints, cfg: &DetectConfig) -> Vec<PlaneRegion> {
    let points = &pts.roof_candidates;
    let n = points.len();
    if n < cfg.min_points.max(3) {
        return Vec::new();
    }

    // Canonical order: rank r holds the original index order[r].
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a].lex_cmp(&points[b]));
    let canon: Vec<Point3> = order.iter().map(|&i| points[i]).collect();

    let grid = GridKnn::new(&canon);
    let normals = if n >= cfg.k_neighbors + 1 {
        estimate_normals(&canon, cfg.k_neighbors).ok()
    } else {
        None
    };
    let residuals = local_residuals(&canon, &grid, cfg.k_neighbors.min(n - 1));

    let mut seed_order: Vec<usize> = (0..n).collect();
    seed_order.sort_by(|&a, &b| {
        residuals[a]
            .partial_cmp(&residuals[b])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut assigned = vec![false; n];
    let mut seed_used = vec![false; n];
    let mut regions: Vec<Vec<usize>> = Vec::new(); // canonical ranks

    let cos_max = cfg.normal_angle_max.to_radians().cos();
    for &seed in &seed_order {
        if assigned[seed] || seed_used[seed] || !residuals[seed].is_finite() {
            continue;
        }
        seed_used[seed] = true;

        // Region plane bootstraps from the seed's local neighborhood.
        let seed_nbrs = grid.knn(seed, cfg.k_neighbors.min(n - 1));
        let mut boot = PlaneAccum::default();
        boot.add(canon[seed]);
        for &j in &seed_nbrs {
            boot.add(canon[j]);
        }
        let Some(mut plane) = boot.fit() else { continue };

        let mut members: Vec<usize> = Vec::new();
        let mut in_region = vec![false; n];
        let mut acc = PlaneAccum::default();
        let mut since_refit = 0usize;
        // Min-heap on canonical rank keeps expansion order deterministic.
        let mut frontier = std::collections::BinaryHeap::new();
        frontier.push(std::cmp::Reverse(seed));
        let mut queued = vec![false; n];
        queued[seed] = true;

        while let Some(std::cmp::Reverse(c)) = frontier.pop() {
            if assigned[c] || in_region[c] {
                continue;
            }
            let d = point_plane_distance(canon[c], &plane).abs();
            if d > cfg.dist_epsilon {
                continue;
            }
            if let Some(nrm) = &normals {
                let pn = nrm[c];
                let has_normal = pn != [0.0, 0.0, 0.0];
                if has_normal {
                    let dot = (pn[0] * plane.normal[0]
                        + pn[1] * plane.normal[1]
                        + pn[2] * plane.normal[2])
                        .abs();
                    if dot < cos_max {
                        continue;
                    }
                }
            }
            in_region[c] = true;
            members.push(c);
            acc.add(canon[c]);
            since_refit += 1;
            if since_refit >= members.len().div_ceil(2) {
                if let Some(p) = acc.fit() {
                    plane = p;
                }
                since_refit = 0;
            }
            for &nb in &grid.knn(c, cfg.k_neighbors.min(n - 1)) {
                if !queued[nb] && !assigned[nb] && !in_region[nb] {
                    queued[nb] = true;
                    frontier.push(std::cmp::Reverse(nb));
                }
            }
        }

        if members.len() >= cfg.min_points {
            for &m in &members {
                assigned[m] = true;
            }
            members.sort_unstable();
            regions.push(members);
        }
    }

    // Largest first; ties by smallest member rank.
    regions.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    regions
        .into_iter()
        .filter_map(|ranks| {
            let member_pts: Vec<Point3> = ranks.iter().map(|&r| canon[r]).collect();
            let plane = fit_plane(&member_pts).ok()?;
            let mut member_indices: Vec<usize> = ranks.iter().map(|&r| order[r]).collect();
            member_indices.sort_unstable();
            Some(PlaneRegion {
                plane,
                member_indices,
                kind: RegionKind::Roof,
            })
        })
        .collect()
}

/// Mark regions whose normal tilts more than `wall_angle_min` degrees from
/// vertical as walls. Downstream stages consume roof regions only.
pub fn classify_regions(mut regions: Vec<PlaneRegion>, wall_angle_min: f64) -> Vec<PlaneRegion> {
    for r in &mut regions {
        r.kind = if r.plane.tilt_degrees() > wall_angle_min {
            RegionKind::Wall
        } else {
            RegionKind::Roof
        };
    }
    regions
}

/// Convenience used by errors below; regions with walls filtered out.
pub fn roof_regions(regions: &[PlaneRegion]) -> Vec<&PlaneRegion> {
    regions.iter().filter(|r| r.kind == RegionKind::Roof).collect()
}

impl From<GeomError> for DetectError {
    fn from(e: GeomError) -> Self {
        DetectError::DegenerateInput(e.to_string())
    }
}
