//! Reference heights and the three levels of detail: LoD2.2 roof shapes on
//! the final partition, LoD1.3 multi-height prisms after merging parts with
//! small height gaps, LoD1.2 single prism per footprint.

mod extrude;
mod merge;

pub use extrude::{extrude_parts, ExtrudeSpec};
pub use merge::{merge_parts_lod13, Lod13Part};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Plane, Point3, Solid};
use crate::ingest::BuildingPoints;
use crate::partition::RoofPartition;

#[derive(Debug, Error, PartialEq)]
pub enum LodError {
    #[error("empty input")]
    EmptyInput,
    #[error("no ground points")]
    NoGroundPoints,
    #[error("no roof points")]
    NoRoofPoints,
    #[error("near-vertical roof plane (|nz| = {nz:.4}) cannot be lifted")]
    NonVerticalizablePlane { nz: f64 },
    #[error("face {0} has no label")]
    UnlabeledFace(usize),
}

/// LoD parameters exposed in the config file.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct LodConfig {
    /// LoD1.3: merge adjacent parts while their height gap is below this,
    /// meters (about one storey).
    pub merge_threshold: f64,
    /// Percentile used as the extrusion height reference.
    pub extrusion_percentile: f64,
}

impl Default for LodConfig {
    fn default() -> Self {
        Self { merge_threshold: 3.0, extrusion_percentile: 70.0 }
    }
}

impl LodConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.merge_threshold < 0.0 {
            return Err("merge_threshold must be >= 0".into());
        }
        if !(self.extrusion_percentile > 0.0 && self.extrusion_percentile <= 100.0) {
            return Err("extrusion_percentile must be in (0, 100]".into());
        }
        Ok(())
    }
}

/// Nearest-rank percentile: the sorted element at 1-based index
/// ceil(p/100 * n). Deterministic and an exact order statistic.
pub fn percentile(values: &[f64], p: f64) -> Result<f64, LodError> {
    if values.is_empty() {
        return Err(LodError::EmptyInput);
    }
    debug_assert!(p > 0.0 && p <= 100.0);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let rank = ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

/// The four per-part height statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceHeights {
    pub h_min: f64,
    pub h_max: f64,
    pub h_p50: f64,
    pub h_p70: f64,
}

/// Nearest-rank min/max/p50/p70 of the z-values that fall on a roof part.
pub fn reference_heights(part_points_z: &[f64]) -> Result<ReferenceHeights, LodError> {
    if part_points_z.is_empty() {
        return Err(LodError::EmptyInput);
    }
    Ok(ReferenceHeights {
        h_min: part_points_z.iter().cloned().fold(f64::INFINITY, f64::min),
        h_max: part_points_z.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        h_p50: percentile(part_points_z, 50.0)?,
        h_p70: percentile(part_points_z, 70.0)?,
    })
}

/// Ground elevation: 5th percentile of the ground points within the 4 m
/// buffer.
pub fn ground_height(bp: &BuildingPoints) -> Result<f64, LodError> {
    if bp.ground.is_empty() {
        return Err(LodError::NoGroundPoints);
    }
    let zs: Vec<f64> = bp.ground.iter().map(|p| p.z).collect();
    percentile(&zs, 5.0)
}

/// Ground elevation with the no-ground fallback: the lowest roof point
/// minus 3 m. Returns (height, fallback_used).
pub fn ground_height_or_fallback(bp: &BuildingPoints) -> Result<(f64, bool), LodError> {
    match ground_height(bp) {
        Ok(h) => Ok((h, false)),
        Err(LodError::NoGroundPoints) => {
            let h_min = bp
                .roof_candidates
                .iter()
                .map(|p| p.z)
                .fold(f64::INFINITY, f64::min);
            if !h_min.is_finite() {
                return Err(LodError::NoRoofPoints);
            }
            Ok((h_min - 3.0, true))
        }
        Err(e) => Err(e),
    }
}

/// LoD2.2: lift every labeled face of the final partition onto its region
/// plane and close the shell with walls and a ground face.
pub fn extrude_lod22(
    partition: &RoofPartition,
    plane_of_region: &impl Fn(usize) -> Option<Plane>,
    ground_h: f64,
) -> Result<Solid, LodError> {
    let mut face_planes = Vec::with_capacity(partition.faces.len());
    for (i, f) in partition.faces.iter().enumerate() {
        let region = f.label.ok_or(LodError::UnlabeledFace(i))?;
        let plane = plane_of_region(region).ok_or(LodError::UnlabeledFace(i))?;
        face_planes.push(plane);
    }
    extrude_parts(&ExtrudeSpec { partition, face_planes: &face_planes, ground_h })
}

/// LoD1.3 / LoD1.2: flat extrusion of each face to its own height.
pub fn extrude_prisms(
    partition: &RoofPartition,
    heights: &[f64],
    ground_h: f64,
) -> Result<Solid, LodError> {
    let face_planes: Vec<Plane> = heights.iter().map(|&h| Plane::horizontal(h)).collect();
    extrude_parts(&ExtrudeSpec { partition, face_planes: &face_planes, ground_h })
}

/// LoD1.2 extrusion height: p-th percentile over all roof points (p70 by
/// default).
pub fn lod12_height(roof_points: &[Point3], p: f64) -> Result<f64, LodError> {
    if roof_points.is_empty() {
        return Err(LodError::NoRoofPoints);
    }
    let zs: Vec<f64> = roof_points.iter().map(|q| q.z).collect();
    percentile(&zs, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 70.0).unwrap(), 7.0);
        assert_eq!(percentile(&[5.0], 1.0).unwrap(), 5.0);
        assert_eq!(percentile(&[5.0], 100.0).unwrap(), 5.0);
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 50.0).unwrap(), 2.0);
        assert!(matches!(percentile(&[], 50.0), Err(LodError::EmptyInput)));
    }

    #[test]
    fn percentile_matches_sort_index_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let n = rng.random_range(1..50);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
            let p: f64 = rng.random_range(0.001..100.0);
            let mut sorted = v.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let rank = ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n);
            assert_eq!(percentile(&v, p).unwrap(), sorted[rank - 1]);
        }
    }

    #[test]
    fn reference_heights_cases() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let h = reference_heights(&v).unwrap();
        assert_eq!((h.h_min, h.h_max, h.h_p50, h.h_p70), (1.0, 10.0, 5.0, 7.0));
        let c = reference_heights(&[4.0, 4.0, 4.0]).unwrap();
        assert_eq!((c.h_min, c.h_max, c.h_p50, c.h_p70), (4.0, 4.0, 4.0, 4.0));
        assert!(matches!(reference_heights(&[]), Err(LodError::EmptyInput)));
        assert!(h.h_min <= h.h_p50 && h.h_p50 <= h.h_p70 && h.h_p70 <= h.h_max);
    }

    fn bp(ground_z: &[f64], roof_z: &[f64]) -> BuildingPoints {
        BuildingPoints {
            building_id: "t".into(),
            roof_candidates: roof_z
                .iter()
                .map(|&z| Point3::new(0.0, 0.0, z))
                .collect(),
            ground: ground_z
                .iter()
                .map(|&z| Point3::new(0.0, 0.0, z))
                .collect(),
        }
    }

    #[test]
    fn ground_height_cases() {
        let zs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        assert_eq!(ground_height(&bp(&zs, &[])).unwrap(), 0.0);
        assert_eq!(ground_height(&bp(&[1.2], &[])).unwrap(), 1.2);
        assert!(matches!(
            ground_height(&bp(&[], &[])),
            Err(LodError::NoGroundPoints)
        ));
        // Fallback: lowest roof point minus 3.
        let (h, fallback) = ground_height_or_fallback(&bp(&[], &[10.0, 12.0])).unwrap();
        assert!(fallback);
        assert_eq!(h, 7.0);
    }

    #[test]
    fn lod12_height_is_p70() {
        let pts: Vec<Point3> = (1..=10)
            .map(|i| Point3::new(0.0, 0.0, i as f64))
            .collect();
        assert_eq!(lod12_height(&pts, 70.0).unwrap(), 7.0);
        assert_eq!(
            lod12_height(&[Point3::new(0.0, 0.0, 4.0)], 70.0).unwrap(),
            4.0
        );
        assert!(matches!(lod12_height(&[], 70.0), Err(LodError::NoRoofPoints)));
    }

    #[test]
    fn heights_ordering_invariant_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let n = rng.random_range(1..40);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..40.0)).collect();
            let h = reference_heights(&v).unwrap();
            assert!(h.h_min <= h.h_p50 && h.h_p50 <= h.h_p70 && h.h_p70 <= h.h_max);
        }
    }
}
