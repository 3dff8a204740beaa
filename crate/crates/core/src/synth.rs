//! Synthetic test corpus: flat, gable, hip and L-plus-tower buildings with
//! grid-sampled roof points (~8 pts/m2), surrounding ground points, optional
//! Gaussian z-noise, and analytic ground truth where it is cheap to state.
//! Deterministic per (seed, building index), so corpus generation is
//! independent of ordering and worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{Point2, Point3, Polygon2};
use crate::ingest::{FootprintRecord, PointClass, PointRecord};

/// Roof sample spacing, meters (about 8 points per square meter).
pub const GRID_STEP: f64 = 0.35;
/// Grid phase: keeps samples off integer edge lines, so height jumps fall
/// centrally between sample columns.
pub const GRID_PHASE: f64 = 0.175;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Archetype {
    Flat,
    Gable,
    Hip,
    LTower,
}

/// What the generator knows about a building, for test oracles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub id: String,
    pub archetype: Archetype,
    pub sigma: f64,
    pub ground_h: f64,
    /// Analytic LoD2.2 volume where closed-form (None for hip).
    pub volume_lod22: Option<f64>,
    pub expected_lod13_parts: usize,
    pub expected_roof_planes: usize,
    pub n_roof_points: usize,
}

#[derive(Debug, Clone)]
pub struct SynthBuilding {
    pub footprint: FootprintRecord,
    pub points: Vec<PointRecord>,
    pub truth: GroundTruth,
}

/// Generate `count` buildings cycling through the archetypes, placed on a
/// 60 m grid. `sigma` is the z-noise standard deviation in meters.
pub fn generate(count: usize, seed: u64, sigma: f64) -> Vec<SynthBuilding> {
    let cols = (count as f64).sqrt().ceil() as usize;
    (0..count)
        .map(|i| {
            let ox = (i % cols) as f64 * 60.0;
            let oy = (i / cols) as f64 * 60.0;
            building(i, ox, oy, seed, sigma)
        })
        .collect()
}

fn building(index: usize, ox: f64, oy: f64, seed: u64, sigma: f64) -> SynthBuilding {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let archetype = match index % 4 {
        0 => Archetype::Flat,
        1 => Archetype::Gable,
        2 => Archetype::Hip,
        _ => Archetype::LTower,
    };
    let id = format!("synth-{index:05}");
    match archetype {
        Archetype::Flat => flat(&id, ox, oy, &mut rng, sigma),
        Archetype::Gable => gable(&id, ox, oy, &mut rng, sigma),
        Archetype::Hip => hip(&id, ox, oy, &mut rng, sigma),
        Archetype::LTower => l_tower(&id, ox, oy, &mut rng, sigma),
    }
}

fn noise(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    // Box-Muller keeps the dependency surface small.
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    sigma * (-2.0 * u1.ln()).sqrt() * u2.cos()
}

/// Sample the roof height field over the footprint on the standard grid.
fn sample_roof(
    fp: &Polygon2,
    rng: &mut ChaCha8Rng,
    sigma: f64,
    z_at: impl Fn(f64, f64) -> f64,
) -> Vec<PointRecord> {
    let (lo, hi) = fp.bbox();
    let mut out = Vec::new();
    let mut y = lo.y + GRID_PHASE;
    while y < hi.y {
        let mut x = lo.x + GRID_PHASE;
        while x < hi.x {
            if fp.contains(Point2::new(x, y)) {
                out.push(PointRecord {
                    position: Point3::new(x, y, z_at(x, y) + noise(rng, sigma)),
                    class: PointClass::Building,
                });
            }
            x += GRID_STEP;
        }
        y += GRID_STEP;
    }
    out
}

/// Ground ring around the footprint: three offset bands within the 4 m
/// buffer at z ~ 0.
fn sample_ground(fp: &Polygon2, rng: &mut ChaCha8Rng, sigma: f64) -> Vec<PointRecord> {
    let (lo, hi) = fp.bbox();
    let mut out = Vec::new();
    let mut y = lo.y - 3.5;
    while y < hi.y + 3.5 {
        let mut x = lo.x - 3.5;
        while x < hi.x + 3.5 {
            let p = Point2::new(x, y);
            let d = fp.distance_to_point(p);
            if d > 0.3 && d <= 3.5 {
                out.push(PointRecord {
                    position: Point3::new(x, y, noise(rng, sigma)),
                    class: PointClass::Ground,
                });
            }
            x += 0.7;
        }
        y += 0.7;
    }
    out
}

/// A few dozen points on one facade plane, to exercise wall classification.
fn sample_wall(
    fp_edge_x: f64,
    y0: f64,
    y1: f64,
    roof_h: f64,
    rng: &mut ChaCha8Rng,
    sigma: f64,
) -> Vec<PointRecord> {
    let mut out = Vec::new();
    let mut y = y0 + 0.3;
    while y < y1 - 0.3 {
        let mut z = 0.5;
        while z < roof_h - 0.4 {
            out.push(PointRecord {
                position: Point3::new(fp_edge_x + noise(rng, sigma) * 0.2, y, z),
                class: PointClass::Building,
            });
            z += 0.5;
        }
        y += 0.5;
    }
    out
}

fn record(
    id: &str,
    fp: Polygon2,
    points: Vec<PointRecord>,
    truth: GroundTruth,
) -> SynthBuilding {
    SynthBuilding {
        footprint: FootprintRecord {
            id: id.to_string(),
            polygon: fp,
            attributes: std::collections::BTreeMap::new(),
        },
        points,
        truth,
    }
}

fn flat(id: &str, ox: f64, oy: f64, rng: &mut ChaCha8Rng, sigma: f64) -> SynthBuilding {
    let w = rng.random_range(8..=14) as f64;
    let d = rng.random_range(8..=14) as f64;
    let h = rng.random_range(3..=8) as f64;
    let fp = Polygon2::rect(ox, oy, ox + w, oy + d);
    let mut points = sample_roof(&fp, rng, sigma, |_, _| h);
    let n_roof = points.len();
    points.extend(sample_ground(&fp, rng, sigma));
    let truth = GroundTruth {
        id: id.to_string(),
        archetype: Archetype::Flat,
        sigma,
        ground_h: 0.0,
        volume_lod22: Some(w * d * h),
        expected_lod13_parts: 1,
        expected_roof_planes: 1,
        n_roof_points: n_roof,
    };
    record(id, fp, points, truth)
}

fn gable(id: &str, ox: f64, oy: f64, rng: &mut ChaCha8Rng, sigma: f64) -> SynthBuilding {
    let w = (rng.random_range(4..=6) * 2) as f64; // even width, ridge on integer
    let d = rng.random_range(8..=12) as f64;
    let h_eave = rng.random_range(3..=5) as f64;
    let rise = rng.random_range(15..=25) as f64 / 10.0;
    let fp = Polygon2::rect(ox, oy, ox + w, oy + d);
    let ridge_x = ox + w / 2.0;
    let slope = rise / (w / 2.0);
    let z = move |x: f64, _y: f64| h_eave + rise - slope * (x - ridge_x).abs();
    let mut points = sample_roof(&fp, rng, sigma, z);
    let n_roof = points.len();
    points.extend(sample_wall(ox, oy, oy + d, h_eave, rng, sigma));
    points.extend(sample_ground(&fp, rng, sigma));
    let truth = GroundTruth {
        id: id.to_string(),
        archetype: Archetype::Gable,
        sigma,
        ground_h: 0.0,
        volume_lod22: Some(w * d * h_eave + d * 0.5 * w * rise),
        expected_lod13_parts: 1,
        expected_roof_planes: 2,
        n_roof_points: n_roof,
    };
    record(id, fp, points, truth)
}

fn hip(id: &str, ox: f64, oy: f64, rng: &mut ChaCha8Rng, sigma: f64) -> SynthBuilding {
    let d = (rng.random_range(4..=5) * 2) as f64;
    let w = d + (rng.random_range(2..=4) * 2) as f64; // ridge length w - d
    let h_eave = rng.random_range(3..=5) as f64;
    let rise = rng.random_range(16..=24) as f64 / 10.0;
    let fp = Polygon2::rect(ox, oy, ox + w, oy + d);
    let cy = oy + d / 2.0;
    let slope = rise / (d / 2.0);
    // Equal-slope hip: ridge from (ox + d/2, cy) to (ox + w - d/2, cy).
    let (rx0, rx1) = (ox + d / 2.0, ox + w - d / 2.0);
    let z = move |x: f64, y: f64| {
        let dy = (y - cy).abs();
        let dx = if x < rx0 {
            rx0 - x
        } else if x > rx1 {
            x - rx1
        } else {
            0.0
        };
        h_eave + rise - slope * dy.max(dx)
    };
    let mut points = sample_roof(&fp, rng, sigma, z);
    let n_roof = points.len();
    points.extend(sample_ground(&fp, rng, sigma));
    let truth = GroundTruth {
        id: id.to_string(),
        archetype: Archetype::Hip,
        sigma,
        ground_h: 0.0,
        volume_lod22: None,
        expected_lod13_parts: 1,
        expected_roof_planes: 4,
        n_roof_points: n_roof,
    };
    record(id, fp, points, truth)
}

fn l_tower(id: &str, ox: f64, oy: f64, rng: &mut ChaCha8Rng, sigma: f64) -> SynthBuilding {
    // L footprint: w x d with a notch cut from the NE corner; a 4x4 tower
    // sits in the west arm and rises above the 3 m merge threshold.
    let w = rng.random_range(12..=16) as f64;
    let d = rng.random_range(10..=14) as f64;
    let notch_w = (w / 2.0).floor();
    let notch_d = (d / 2.0).floor();
    let h_low = rng.random_range(3..=4) as f64;
    let h_high = h_low + 3.5 + rng.random_range(0..=10) as f64 / 10.0;
    let fp = Polygon2::new(
        vec![
            Point2::new(ox, oy),
            Point2::new(ox + w, oy),
            Point2::new(ox + w, oy + d - notch_d),
            Point2::new(ox + w - notch_w, oy + d - notch_d),
            Point2::new(ox + w - notch_w, oy + d),
            Point2::new(ox, oy + d),
        ],
        Vec::new(),
    );
    let (tx0, ty0) = (ox + 2.0, oy + d - 6.0);
    let (tx1, ty1) = (tx0 + 4.0, ty0 + 4.0);
    let z = move |x: f64, y: f64| {
        if x >= tx0 && x <= tx1 && y >= ty0 && y <= ty1 {
            h_high
        } else {
            h_low
        }
    };
    let mut points = sample_roof(&fp, rng, sigma, z);
    let n_roof = points.len();
    points.extend(sample_ground(&fp, rng, sigma));
    let area = w * d - notch_w * notch_d;
    let truth = GroundTruth {
        id: id.to_string(),
        archetype: Archetype::LTower,
        sigma,
        ground_h: 0.0,
        volume_lod22: Some(area * h_low + 16.0 * (h_high - h_low)),
        expected_lod13_parts: 2,
        expected_roof_planes: 2,
        n_roof_points: n_roof,
    };
    record(id, fp, points, truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = generate(8, 42, 0.05);
        let b = generate(8, 42, 0.05);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.footprint.id, y.footprint.id);
            assert_eq!(x.points.len(), y.points.len());
            for (p, q) in x.points.iter().zip(y.points.iter()) {
                assert_eq!(p.position, q.position);
            }
        }
        let c = generate(8, 43, 0.05);
        assert_ne!(
            a[0].points[0].position, c[0].points[0].position,
            "different seeds must differ"
        );
    }

    #[test]
    fn archetypes_cycle_and_have_points() {
        let all = generate(8, 7, 0.0);
        assert_eq!(all[0].truth.archetype, Archetype::Flat);
        assert_eq!(all[1].truth.archetype, Archetype::Gable);
        assert_eq!(all[2].truth.archetype, Archetype::Hip);
        assert_eq!(all[3].truth.archetype, Archetype::LTower);
        for b in &all {
            assert!(b.truth.n_roof_points > 100, "{:?}", b.truth);
            assert!(
                b.points.iter().any(|p| p.class == PointClass::Ground),
                "ground ring missing"
            );
        }
    }

    #[test]
    fn roof_points_match_height_field_when_noiseless() {
        let b = &generate(4, 9, 0.0)[0]; // flat
        let h = b
            .points
            .iter()
            .filter(|p| p.class == PointClass::Building)
            .map(|p| p.position.z)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(h > 2.5);
        for p in &b.points {
            if p.class == PointClass::Building {
                assert_eq!(p.position.z, h);
            }
        }
    }
}
