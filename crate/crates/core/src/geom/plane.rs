use serde::{Deserialize, Serialize};

use super::Point2;

/// Plane {p : normal . p = offset} with a unit normal in canonical
/// orientation: normal.z >= 0, and for vertical planes (normal.z ~ 0) the
/// (nx, ny) pair is made lexicographically non-negative so that equal walls
/// compare stably.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: [f64; 3],
    pub offset: f64,
}

const VERTICAL_EPS: f64 = 1e-12;

impl Plane {
    /// Normalize and canonicalize. `normal` need not be unit length.
    pub fn new(normal: [f64; 3], offset: f64) -> Self {
        let len = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
        let mut n = [normal[0] / len, normal[1] / len, normal[2] / len];
        let mut o = offset / len;
        let flip = if n[2] < -VERTICAL_EPS {
            true
        } else if n[2].abs() <= VERTICAL_EPS {
            n[0] < 0.0 || (n[0] == 0.0 && n[1] < 0.0)
        } else {
            false
        };
        if flip {
            n = [-n[0], -n[1], -n[2]];
            o = -o;
        }
        Self { normal: n, offset: o }
    }

    /// Horizontal plane z = h.
    pub fn horizontal(h: f64) -> Self {
        Self {
            normal: [0.0, 0.0, 1.0],
            offset: h,
        }
    }

    /// Angle in degrees between the plane normal and the +z axis.
    pub fn tilt_degrees(&self) -> f64 {
        self.normal[2].clamp(-1.0, 1.0).acos().to_degrees()
    }

    /// Height of the plane above the xy location `p`.
    /// Only meaningful when the plane is not vertical (|nz| above caller's
    /// threshold).
    pub fn z_at(&self, p: Point2) -> f64 {
        (self.offset - self.normal[0] * p.x - self.normal[1] * p.y) / self.normal[2]
    }

    /// Angle in degrees between this plane's normal and another's, in [0, 180].
    pub fn normal_angle_degrees(&self, other: &Plane) -> f64 {
        let d = self.normal[0] * other.normal[0]
            + self.normal[1] * other.normal[1]
            + self.normal[2] * other.normal[2];
        d.clamp(-1.0, 1.0).acos().to_degrees()
    }
}
