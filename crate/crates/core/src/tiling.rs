//! Quadtree tiling of the footprint set: split until no leaf holds more
//! than `max_per_leaf` buildings, so per-tile workloads and output sizes
//! stay balanced. Buildings go to the leaf containing their footprint
//! centroid.

use serde::{Deserialize, Serialize};

use crate::geom::Point2;
use crate::ingest::{FootprintRecord, PointRecord};

/// Inflation around a tile bbox when gathering points, so ground-buffer
/// points of edge buildings stay available, meters.
pub const TILE_POINT_MARGIN_M: f64 = 4.0;

/// Hard depth cap; identical centroids would otherwise split forever.
const MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TilingConfig {
    pub max_per_leaf: usize,
}

impl Default for TilingConfig {
    fn default() -> Self {
        Self { max_per_leaf: 3500 }
    }
}

impl TilingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_per_leaf == 0 {
            return Err("max_per_leaf must be >= 1".into());
        }
        Ok(())
    }
}

/// Axis-aligned square tile cell.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TileBounds {
    pub min_x: f64,
    pub min_y: f64,
    pub side: f64,
}

impl TileBounds {
    fn quadrant(&self, q: usize) -> TileBounds {
        let half = self.side / 2.0;
        let (dx, dy) = match q {
            0 => (0.0, 0.0),   // SW
            1 => (half, 0.0),  // SE
            2 => (0.0, half),  // NW
            _ => (half, half), // NE
        };
        TileBounds { min_x: self.min_x + dx, min_y: self.min_y + dy, side: half }
    }

    fn quadrant_of(&self, p: Point2) -> usize {
        let mx = self.min_x + self.side / 2.0;
        let my = self.min_y + self.side / 2.0;
        match (p.x >= mx, p.y >= my) {
            (false, false) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (true, true) => 3,
        }
    }

    pub fn contains_inflated(&self, x: f64, y: f64, margin: f64) -> bool {
        x >= self.min_x - margin
            && x <= self.min_x + self.side + margin
            && y >= self.min_y - margin
            && y <= self.min_y + self.side + margin
    }
}

/// Leaf tile: quadkey over {0 SW, 1 SE, 2 NW, 3 NE}, bounds, and the indices
/// of its buildings in footprint input order.
#[derive(Debug, Clone)]
pub struct Tile {
    pub quadkey: String,
    pub bounds: TileBounds,
    pub building_indices: Vec<usize>,
}

/// Build the quadtree over footprint centroids. The root is the smallest
/// square covering all centroids, expanded by 1%; leaves with more than
/// `max_per_leaf` buildings split recursively; empty leaves are pruned and
/// leaves come out sorted by quadkey.
pub fn build_quadtree(footprints: &[FootprintRecord], max_per_leaf: usize) -> Vec<Tile> {
    if footprints.is_empty() {
        return Vec::new();
    }
    let centroids: Vec<Point2> = footprints.iter().map(|f| f.polygon.centroid()).collect();
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in &centroids {
        lo.x = lo.x.min(c.x);
        lo.y = lo.y.min(c.y);
        hi.x = hi.x.max(c.x);
        hi.y = hi.y.max(c.y);
    }
    let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1.0);
    let side = extent * 1.01;
    let cx = (lo.x + hi.x) / 2.0;
    let cy = (lo.y + hi.y) / 2.0;
    let root = TileBounds { min_x: cx - side / 2.0, min_y: cy - side / 2.0, side };

    let mut leaves: Vec<Tile> = Vec::new();
    let mut stack: Vec<Tile> = vec![Tile {
        quadkey: String::new(),
        bounds: root,
        building_indices: (0..footprints.len()).collect(),
    }];
    while let Some(tile) = stack.pop() {
        if tile.building_indices.len() <= max_per_leaf || tile.quadkey.len() >= MAX_DEPTH {
            if !tile.building_indices.is_empty() {
                leaves.push(tile);
            }
            continue;
        }
        let mut children: [Vec<usize>; 4] = Default::default();
        for &bi in &tile.building_indices {
            children[tile.bounds.quadrant_of(centroids[bi])].push(bi);
        }
        for (q, indices) in children.into_iter().enumerate() {
            if indices.is_empty() {
                continue;
            }
            stack.push(Tile {
                quadkey: format!("{}{}", tile.quadkey, q),
                bounds: tile.bounds.quadrant(q),
                building_indices: indices,
            });
        }
    }
    leaves.sort_by(|a, b| a.quadkey.cmp(&b.quadkey));
    leaves
}

/// Points belonging to a tile: everything inside its bounds inflated by
/// 4 m, so edge buildings keep their ground buffer. Points near tile seams
/// are duplicated into both tiles on purpose.
pub fn tile_points<'a>(tile: &Tile, points: &'a [PointRecord]) -> Vec<&'a PointRecord> {
    points
        .iter()
        .filter(|p| {
            tile.bounds
                .contains_inflated(p.position.x, p.position.y, TILE_POINT_MARGIN_M)
        })
        .collect()
}
