//! Per-building quality attributes: source-data statistics (point counts,
//! no-data area), reconstruction error against the input points, and 2D/3D
//! validity codes. A 2D code means the input was bad; a 3D code means the
//! reconstruction failed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{
    point_in_ring_strict, ring_self_intersects, ring_signed_area, Point2, Point3, Polygon2,
    Semantics, Solid, EPS_PLANAR,
};

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("no roof face covers any input point")]
    NoCoveredPoints,
}

/// 2D footprint validity, first failing check wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Validity2d {
    Valid,
    RingTooSmall,
    SelfIntersection,
    HoleOutsideExterior,
    WrongOrientation,
}

/// 3D solid validity, first failing check wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Validity3d {
    Valid,
    NotClosed,
    InconsistentOrientation,
    NonPlanarFace,
    NegativeVolume,
    EulerViolation,
}

/// Flags accumulated along the reconstruction ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QualityFlag {
    NoGroundPoints,
    NoData,
    NoRoofPlanes,
    FallbackLod,
    Invalid2d,
    Failed3d,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityAttributes {
    pub n_roof_points: usize,
    pub nodata_fraction: f64,
    pub rmse_lod22: Option<f64>,
    pub max_error_lod22: Option<f64>,
    /// Points whose xy no roof face covers, excluded from the RMSE.
    pub n_uncovered_points: usize,
    pub validity_2d: Validity2d,
    pub validity_3d_lod12: Option<Validity3d>,
    pub validity_3d_lod13: Option<Validity3d>,
    pub validity_3d_lod22: Option<Validity3d>,
    pub flags: BTreeSet<QualityFlag>,
}

impl QualityAttributes {
    pub fn new(validity_2d: Validity2d) -> Self {
        Self {
            n_roof_points: 0,
            nodata_fraction: 1.0,
            rmse_lod22: None,
            max_error_lod22: None,
            n_uncovered_points: 0,
            validity_2d,
            validity_3d_lod12: None,
            validity_3d_lod13: None,
            validity_3d_lod22: None,
            flags: BTreeSet::new(),
        }
    }
}

/// Vertical error between the model and the points: per point the absolute
/// difference between its z and the model's highest roof face covering its
/// xy. Uncovered points are excluded and counted separately; returns
/// (rmse, max, uncovered).
pub fn rmse_and_max(
    model: &Solid,
    roof_points: &[Point3],
) -> Result<(f64, f64, usize), QualityError> {
    struct RoofFace {
        ring2d: Vec<Point2>,
        bbox: (Point2, Point2),
        // Height field z = a*x + b*y + c from the Newell normal.
        a: f64,
        b: f64,
        c: f64,
    }
    let mut faces2d = Vec::new();
    for f in &model.faces {
        if f.semantics != Semantics::Roof || f.ring.len() < 3 {
            continue;
        }
        let Some(n) = model.face_normal(f) else { continue };
        if n[2].abs() < 1e-9 {
            continue;
        }
        let p0 = model.vertices[f.ring[0]];
        let d = n[0] * p0.x + n[1] * p0.y + n[2] * p0.z;
        let ring2d: Vec<Point2> = f.ring.iter().map(|&i| model.vertices[i].xy()).collect();
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &ring2d {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        faces2d.push(RoofFace {
            ring2d,
            bbox: (lo, hi),
            a: -n[0] / n[2],
            b: -n[1] / n[2],
            c: d / n[2],
        });
    }
    let mut sq_sum = 0.0;
    let mut max_err: f64 = 0.0;
    let mut covered = 0usize;
    let mut uncovered = 0usize;
    for p in roof_points {
        let xy = p.xy();
        let mut best_z: Option<f64> = None;
        for rf in &faces2d {
            if xy.x < rf.bbox.0.x - 1e-9
                || xy.x > rf.bbox.1.x + 1e-9
                || xy.y < rf.bbox.0.y - 1e-9
                || xy.y > rf.bbox.1.y + 1e-9
            {
                continue;
            }
            let inside =
                point_in_ring_strict(xy, &rf.ring2d) || on_ring_boundary(xy, &rf.ring2d);
            if inside {
                let z = rf.a * xy.x + rf.b * xy.y + rf.c;
                if best_z.map_or(true, |b| z > b) {
                    best_z = Some(z);
                }
            }
        }
        match best_z {
            Some(z) => {
                let e = (p.z - z).abs();
                sq_sum += e * e;
                max_err = max_err.max(e);
                covered += 1;
            }
            None => uncovered += 1,
        }
    }
    if covered == 0 {
        return Err(QualityError::NoCoveredPoints);
    }
    Ok(((sq_sum / covered as f64).sqrt(), max_err, uncovered))
}

fn on_ring_boundary(p: Point2, ring: &[Point2]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if a.distance(b) == 0.0 {
            continue;
        }
        let seg = crate::geom::LineSeg2 { a, b };
        if seg.distance_to_point(p) <= 1e-9 {
            return true;
        }
    }
    false
}

/// Grade a parsed footprint, first failing check wins.
pub fn validity_2d(fp: &Polygon2) -> Validity2d {
    let mut rings: Vec<&[Point2]> = vec![&fp.exterior];
    for h in &fp.holes {
        rings.push(h);
    }
    for ring in &rings {
        if distinct_vertices(ring) < 3 {
            return Validity2d::RingTooSmall;
        }
    }
    for ring in &rings {
        if ring_self_intersects(ring) {
            return Validity2d::SelfIntersection;
        }
    }
    for h in &fp.holes {
        let all_inside = h
            .iter()
            .all(|p| point_in_ring_strict(*p, &fp.exterior) || on_ring_boundary(*p, &fp.exterior));
        if !all_inside {
            return Validity2d::HoleOutsideExterior;
        }
    }
    // Post-normalization residual: a ring that cannot be oriented.
    if ring_signed_area(&fp.exterior) <= 0.0 {
        return Validity2d::WrongOrientation;
    }
    for h in &fp.holes {
        if ring_signed_area(h) >= 0.0 {
            return Validity2d::WrongOrientation;
        }
    }
    Validity2d::Valid
}

fn distinct_vertices(ring: &[Point2]) -> usize {
    let mut seen: Vec<Point2> = Vec::new();
    for p in ring {
        if !seen.iter().any(|q| q.distance(*p) <= crate::geom::EPS_COORD) {
            seen.push(*p);
        }
    }
    seen.len()
}

/// Grade a solid: closure, orientation, planarity, volume sign and the
/// Euler characteristic per shell (V - E + F = 2; faces are disks by
/// construction, so genus > 0 shows up here).
pub fn validity_3d(s: &Solid) -> Validity3d {
    if s.faces.is_empty() {
        return Validity3d::NotClosed;
    }
    let incidences = s.edge_incidences();
    for &(fwd, bwd) in incidences.values() {
        if fwd + bwd != 2 {
            return Validity3d::NotClosed;
        }
    }
    for &(fwd, bwd) in incidences.values() {
        if fwd != 1 || bwd != 1 {
            return Validity3d::InconsistentOrientation;
        }
    }
    for f in &s.faces {
        if s.face_planarity_deviation(f) > EPS_PLANAR {
            return Validity3d::NonPlanarFace;
        }
    }
    if s.signed_volume() <= 0.0 {
        return Validity3d::NegativeVolume;
    }
    for shell in s.shells() {
        let mut verts: BTreeSet<usize> = BTreeSet::new();
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &fi in &shell {
            let ring = &s.faces[fi].ring;
            let n = ring.len();
            for k in 0..n {
                let u = ring[k];
                let v = ring[(k + 1) % n];
                verts.insert(u);
                if u != v {
                    edges.insert((u.min(v), u.max(v)));
                }
            }
        }
        let euler = verts.len() as i64 - edges.len() as i64 + shell.len() as i64;
        if euler != 2 {
            return Validity3d::EulerViolation;
        }
    }
    Validity3d::Valid
}

/// Source-data coverage: overlay a 1 m grid on the footprint bbox; the
/// no-data fraction is the share of in-footprint cell centers whose cell
/// contains no roof point. Returns (n_roof_points, nodata_fraction).
pub fn coverage_stats(fp: &Polygon2, roof_points: &[Point3]) -> (usize, f64) {
    let (lo, hi) = fp.bbox();
    if !lo.x.is_finite() {
        return (roof_points.len(), 1.0);
    }
    let nx = ((hi.x - lo.x).ceil() as usize).max(1);
    let ny = ((hi.y - lo.y).ceil() as usize).max(1);
    let mut occupied = vec![false; nx * ny];
    for p in roof_points {
        let cx = ((p.x - lo.x).floor() as isize).clamp(0, nx as isize - 1) as usize;
        let cy = ((p.y - lo.y).floor() as isize).clamp(0, ny as isize - 1) as usize;
        occupied[cy * nx + cx] = true;
    }
    let mut inside = 0usize;
    let mut nodata = 0usize;
    for cy in 0..ny {
        for cx in 0..nx {
            let center = Point2::new(lo.x + cx as f64 + 0.5, lo.y + cy as f64 + 0.5);
            if fp.contains(center) {
                inside += 1;
                if !occupied[cy * nx + cx] {
                    nodata += 1;
                }
            }
        }
    }
    let fraction = if inside == 0 {
        if roof_points.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        nodata as f64 / inside as f64
    };
    (roof_points.len(), fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{box_mesh, Face};

    #[test]
    fn rmse_flat_cases() {
        let model = box_mesh(0.0, 0.0, 0.0, 10.0, 10.0, 3.0);
        let on: Vec<Point3> = (0..8)
            .map(|i| Point3::new(1.0 + i as f64, 5.0, 3.0))
            .collect();
        let (rmse, max, unc) = rmse_and_max(&model, &on).unwrap();
        assert_eq!((rmse, max, unc), (0.0, 0.0, 0));

        let mut pts = Vec::new();
        for i in 0..4 {
            pts.push(Point3::new(1.0 + i as f64, 4.0, 3.1));
            pts.push(Point3::new(1.0 + i as f64, 6.0, 2.9));
        }
        let (rmse, max, _) = rmse_and_max(&model, &pts).unwrap();
        assert!((rmse - 0.1).abs() < 1e-12);
        assert!((max - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rmse_chimney_outlier() {
        let model = box_mesh(0.0, 0.0, 0.0, 10.0, 10.0, 3.0);
        let mut pts: Vec<Point3> = (0..20)
            .map(|i| Point3::new(0.5 + 0.45 * i as f64, 5.0, 3.0))
            .collect();
        pts.push(Point3::new(5.0, 5.0, 5.0)); // chimney, 2 m above
        let (rmse, max, _) = rmse_and_max(&model, &pts).unwrap();
        assert!(max >= 2.0);
        assert!(rmse < max);
    }

    #[test]
    fn rmse_uncovered_counted() {
        let model = box_mesh(0.0, 0.0, 0.0, 10.0, 10.0, 3.0);
        let pts = vec![Point3::new(50.0, 50.0, 3.0), Point3::new(5.0, 5.0, 3.0)];
        let (_, _, unc) = rmse_and_max(&model, &pts).unwrap();
        assert_eq!(unc, 1);
        let far = vec![Point3::new(50.0, 50.0, 3.0)];
        assert!(rmse_and_max(&model, &far).is_err());
    }

    #[test]
    fn rmse_translation_invariant() {
        let model = box_mesh(0.0, 0.0, 0.0, 10.0, 10.0, 3.0);
        let pts: Vec<Point3> = (0..10)
            .map(|i| Point3::new(0.7 + 0.8 * i as f64, 5.0, 3.0 + 0.05 * (i % 3) as f64))
            .collect();
        let base = rmse_and_max(&model, &pts).unwrap();
        let shifted_model = box_mesh(100.0, -50.0, 0.0, 110.0, -40.0, 3.0);
        let shifted_pts: Vec<Point3> = pts
            .iter()
            .map(|p| Point3::new(p.x + 100.0, p.y - 50.0, p.z))
            .collect();
        let moved = rmse_and_max(&shifted_model, &shifted_pts).unwrap();
        assert!((base.0 - moved.0).abs() < 1e-9);
        assert!((base.1 - moved.1).abs() < 1e-9);
    }

    fn square() -> Polygon2 {
        Polygon2::rect(0.0, 0.0, 1.0, 1.0)
    }

    #[test]
    fn validity_2d_cases() {
        assert_eq!(validity_2d(&square()), Validity2d::Valid);

        let bow = Polygon2::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
            ],
            Vec::new(),
        );
        assert_eq!(validity_2d(&bow), Validity2d::SelfIntersection);

        let mut hole_outside = square();
        hole_outside.holes.push(vec![
            Point2::new(2.0, 2.0),
            Point2::new(2.0, 3.0),
            Point2::new(3.0, 3.0),
            Point2::new(3.0, 2.0),
        ]);
        assert_eq!(validity_2d(&hole_outside), Validity2d::HoleOutsideExterior);

        let two = Polygon2::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)],
            Vec::new(),
        );
        assert_eq!(validity_2d(&two), Validity2d::RingTooSmall);

        let collinear = Polygon2::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(2.0, 0.0),
            ],
            Vec::new(),
        );
        assert_eq!(validity_2d(&collinear), Validity2d::WrongOrientation);
    }

    #[test]
    fn validity_3d_cases() {
        let cube = box_mesh(0.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        assert_eq!(validity_3d(&cube), Validity3d::Valid);

        let mut open = cube.clone();
        open.faces.remove(1);
        assert_eq!(validity_3d(&open), Validity3d::NotClosed);

        let mut flipped = cube.clone();
        flipped.faces[1].ring.reverse();
        assert_eq!(validity_3d(&flipped), Validity3d::InconsistentOrientation);

        let mut inside_out = cube.clone();
        for f in &mut inside_out.faces {
            f.ring.reverse();
        }
        assert_eq!(validity_3d(&inside_out), Validity3d::NegativeVolume);

        let mut bent = cube.clone();
        bent.vertices.push(Point3::new(0.5, -0.2, 0.5));
        let n = bent.vertices.len() - 1;
        // Replace a wall quad with a pentagon through the off-plane vertex.
        let Face { ring, semantics } = bent.faces[2].clone();
        bent.faces[2] = Face {
            ring: vec![ring[0], ring[1], n, ring[2], ring[3]],
            semantics,
        };
        assert_ne!(validity_3d(&bent), Validity3d::Valid);
    }

    #[test]
    fn coverage_cases() {
        let fp = Polygon2::rect(0.0, 0.0, 10.0, 10.0);
        let full: Vec<Point3> = (0..100)
            .map(|i| Point3::new((i % 10) as f64 + 0.5, (i / 10) as f64 + 0.5, 3.0))
            .collect();
        let (n, nodata) = coverage_stats(&fp, &full);
        assert_eq!(n, 100);
        assert_eq!(nodata, 0.0);

        let (n, nodata) = coverage_stats(&fp, &[]);
        assert_eq!(n, 0);
        assert_eq!(nodata, 1.0);

        // Points in the west half only.
        let half: Vec<Point3> = (0..50)
            .map(|i| Point3::new((i % 5) as f64 + 0.5, (i / 5) as f64 + 0.5, 3.0))
            .collect();
        let (_, nodata) = coverage_stats(&fp, &half);
        assert!((nodata - 0.5).abs() < 1e-12);
    }
}
