//! Primitive geometric types and predicates shared by the whole pipeline.
//!
//! Everything here is an immutable value type. Inputs are assumed to live in
//! a planar metric CRS (meters); no geodetic handling. Exact arithmetic is a
//! non-goal: coordinate equality uses 1e-9 m, face planarity 1e-6 m, which is
//! ample headroom for centimeter-precision survey data.

mod chain;
mod mesh;
mod plane;
mod point;
mod polygon;
mod segment;

pub use chain::chain_loops;
pub use mesh::{box_mesh, Face, Mesh, MeshBuilder, Semantics, Solid};
pub use plane::Plane;
pub use point::{Point2, Point3};
pub use polygon::{
    point_in_ring_strict, ring_interior_point, ring_self_intersects, ring_signed_area, Polygon2,
    Ring,
};
pub use segment::{line_intersection_params, segments_intersect, LineSeg2};

use thiserror::Error;

/// Coordinate equality tolerance in meters.
pub const EPS_COORD: f64 = 1e-9;
/// Face planarity tolerance in meters.
pub const EPS_PLANAR: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// Least-squares plane through `points`, minimizing the sum of squared
/// orthogonal distances. The result is in canonical orientation.
///
/// Fails with `DegenerateInput` for fewer than 3 points or a rank-deficient
/// (collinear) set.
pub fn fit_plane(points: &[Point3]) -> Result<Plane, GeomError> {
    if points.len() < 3 {
        return Err(GeomError::DegenerateInput(format!(
            "plane fit needs >= 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut cz = 0.0;
    for p in points {
        cx += p.x;
        cy += p.y;
        cz += p.z;
    }
    cx /= n;
    cy /= n;
    cz /= n;
    // Covariance of the centered points.
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    for p in points {
        let d = nalgebra::Vector3::new(p.x - cx, p.y - cy, p.z - cz);
        m += d * d.transpose();
    }
    m /= n;
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut min_i = 0;
    let mut mid = f64::INFINITY;
    let mut max_ev: f64 = 0.0;
    for i in 0..3 {
        if eig.eigenvalues[i] < mid {
            mid = eig.eigenvalues[i];
            min_i = i;
        }
        max_ev = max_ev.max(eig.eigenvalues[i]);
    }
    // Collinear points leave two near-zero eigenvalues.
    let mut sorted = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if max_ev <= 0.0 || sorted[1] <= max_ev * 1e-12 {
        return Err(GeomError::DegenerateInput(
            "plane fit input is collinear".into(),
        ));
    }
    let nv = eig.eigenvectors.column(min_i);
    let centroid = nalgebra::Vector3::new(cx, cy, cz);
    Ok(Plane::new(
        [nv[0], nv[1], nv[2]],
        nv.dot(&centroid),
    ))
}

/// Signed orthogonal distance from `p` to `pl` (normal direction positive).
pub fn point_plane_distance(p: Point3, pl: &Plane) -> f64 {
    pl.normal[0] * p.x + pl.normal[1] * p.y + pl.normal[2] * p.z - pl.offset
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn p3(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    #[test]
    fn fit_plane_xy() {
        let pts = [p3(0.0, 0.0, 0.0), p3(1.0, 0.0, 0.0), p3(0.0, 1.0, 0.0)];
        let pl = fit_plane(&pts).unwrap();
        assert!((pl.normal[0]).abs() < 1e-12);
        assert!((pl.normal[1]).abs() < 1e-12);
        assert!((pl.normal[2] - 1.0).abs() < 1e-12);
        assert!(pl.offset.abs() < 1e-12);
    }

    #[test]
    fn fit_plane_tilted_exact() {
        // z = x plane; normal (-1,0,1)/sqrt(2), offset 0, residuals all 0.
        let pts = [
            p3(0.0, 0.0, 0.0),
            p3(1.0, 0.0, 1.0),
            p3(0.0, 1.0, 0.0),
            p3(1.0, 1.0, 1.0),
        ];
        let pl = fit_plane(&pts).unwrap();
        assert!((pl.normal[0] - (-1.0 / SQRT2)).abs() < 1e-9);
        assert!((pl.normal[1]).abs() < 1e-9);
        assert!((pl.normal[2] - 1.0 / SQRT2).abs() < 1e-9);
        assert!(pl.offset.abs() < 1e-9);
        // Independent check: substitute each point into the plane equation.
        for p in &pts {
            let r = pl.normal[0] * p.x + pl.normal[1] * p.y + pl.normal[2] * p.z - pl.offset;
            assert!(r.abs() < 1e-9, "residual {r} for {p:?}");
        }
    }

    #[test]
    fn fit_plane_too_few_points() {
        let pts = [p3(0.0, 0.0, 0.0), p3(1.0, 1.0, 1.0)];
        assert!(matches!(
            fit_plane(&pts),
            Err(GeomError::DegenerateInput(_))
        ));
    }

    #[test]
    fn fit_plane_collinear() {
        let pts = [
            p3(0.0, 0.0, 0.0),
            p3(1.0, 1.0, 1.0),
            p3(2.0, 2.0, 2.0),
            p3(3.0, 3.0, 3.0),
        ];
        assert!(matches!(
            fit_plane(&pts),
            Err(GeomError::DegenerateInput(_))
        ));
    }

    #[test]
    fn fit_plane_local_optimality() {
        // The fitted plane's squared-residual sum beats 100 random perturbations.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                let x = i as f64 * 0.5;
                let y = j as f64 * 0.5;
                let z = 0.3 * x - 0.2 * y + 2.0 + rng.random_range(-0.05..0.05);
                pts.push(p3(x, y, z));
            }
        }
        let pl = fit_plane(&pts).unwrap();
        let ssr = |pl: &Plane| -> f64 {
            pts.iter()
                .map(|p| point_plane_distance(*p, pl).powi(2))
                .sum()
        };
        let best = ssr(&pl);
        for _ in 0..100 {
            let dn = [
                pl.normal[0] + rng.random_range(-0.02..0.02),
                pl.normal[1] + rng.random_range(-0.02..0.02),
                pl.normal[2] + rng.random_range(-0.02..0.02),
            ];
            let perturbed = Plane::new(dn, pl.offset + rng.random_range(-0.02..0.02));
            assert!(ssr(&perturbed) >= best - 1e-12);
        }
    }

    #[test]
    fn signed_distance() {
        let z0 = Plane::new([0.0, 0.0, 1.0], 0.0);
        assert_eq!(point_plane_distance(p3(0.0, 0.0, 5.0), &z0), 5.0);
        assert_eq!(point_plane_distance(p3(0.0, 0.0, 0.0), &z0), 0.0);
        // Plane z = x: normal (-1,0,1)/sqrt(2), offset 0; point (2,0,0) is
        // below it, signed distance -2/sqrt(2) = -sqrt(2).
        let tilted = Plane::new([-1.0 / SQRT2, 0.0, 1.0 / SQRT2], 0.0);
        let d = point_plane_distance(p3(2.0, 0.0, 0.0), &tilted);
        assert!((d - (-SQRT2)).abs() < 1e-12);
    }
}
