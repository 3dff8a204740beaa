use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Point3;

/// Semantic class of a mesh face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Semantics {
    Ground,
    Roof,
    Wall,
}

/// Polygonal face: a single vertex-index loop. Faces with holes are
/// represented as one loop with a zero-width slit so that every face is a
/// disk and Euler counting stays honest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub ring: Vec<usize>,
    pub semantics: Semantics,
}

/// Indexed face set. A `Solid` is a `Mesh` that passes the 3D validity
/// checks (closed, consistently oriented, planar faces, positive volume,
/// Euler characteristic 2 per shell); validity is graded by the quality
/// module, not enforced structurally.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<Face>,
}

pub type Solid = Mesh;

impl Mesh {
    /// Signed volume by the divergence theorem (sum of signed tetrahedra
    /// against the origin over fan-triangulated faces). Positive for closed
    /// meshes with outward orientation.
    pub fn signed_volume(&self) -> f64 {
        let mut vol = 0.0;
        for f in &self.faces {
            if f.ring.len() < 3 {
                continue;
            }
            let a = self.vertices[f.ring[0]];
            for w in f.ring[1..].windows(2) {
                let b = self.vertices[w[0]];
                let c = self.vertices[w[1]];
                vol += a.x * (b.y * c.z - b.z * c.y) - a.y * (b.x * c.z - b.z * c.x)
                    + a.z * (b.x * c.y - b.y * c.x);
            }
        }
        vol / 6.0
    }

    /// Undirected edge incidence counts: (forward, backward) per edge key
    /// (lo, hi). A closed, consistently oriented mesh has exactly one of
    /// each per edge.
    pub fn edge_incidences(&self) -> HashMap<(usize, usize), (usize, usize)> {
        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for f in &self.faces {
            let n = f.ring.len();
            for i in 0..n {
                let u = f.ring[i];
                let v = f.ring[(i + 1) % n];
                if u == v {
                    continue;
                }
                let key = (u.min(v), u.max(v));
                let e = edges.entry(key).or_insert((0, 0));
                if u < v {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        edges
    }

    /// Newell-method unit normal of a face, or None when degenerate.
    pub fn face_normal(&self, face: &Face) -> Option<[f64; 3]> {
        let n = face.ring.len();
        if n < 3 {
            return None;
        }
        let (mut nx, mut ny, mut nz) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[face.ring[i]];
            let q = self.vertices[face.ring[(i + 1) % n]];
            nx += (p.y - q.y) * (p.z + q.z);
            ny += (p.z - q.z) * (p.x + q.x);
            nz += (p.x - q.x) * (p.y + q.y);
        }
        let len = (nx * nx + ny * ny + nz * nz).sqrt();
        if len < 1e-12 {
            return None;
        }
        Some([nx / len, ny / len, nz / len])
    }

    /// Maximum deviation of the face's vertices from its best-fit (Newell)
    /// plane, in meters. Degenerate faces report infinity.
    pub fn face_planarity_deviation(&self, face: &Face) -> f64 {
        let Some(n) = self.face_normal(face) else {
            return f64::INFINITY;
        };
        let k = face.ring.len() as f64;
        let mut d0 = 0.0;
        for &vi in &face.ring {
            let p = self.vertices[vi];
            d0 += n[0] * p.x + n[1] * p.y + n[2] * p.z;
        }
        d0 /= k;
        face.ring
            .iter()
            .map(|&vi| {
                let p = self.vertices[vi];
                (n[0] * p.x + n[1] * p.y + n[2] * p.z - d0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Connected components of faces linked through shared edges.
    pub fn shells(&self) -> Vec<Vec<usize>> {
        let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            let n = f.ring.len();
            for i in 0..n {
                let u = f.ring[i];
                let v = f.ring[(i + 1) % n];
                if u == v {
                    continue;
                }
                edge_faces.entry((u.min(v), u.max(v))).or_default().push(fi);
            }
        }
        let mut seen = vec![false; self.faces.len()];
        let mut shells = Vec::new();
        for start in 0..self.faces.len() {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut comp = Vec::new();
            while let Some(fi) = stack.pop() {
                comp.push(fi);
                let f = &self.faces[fi];
                let n = f.ring.len();
                for i in 0..n {
                    let u = f.ring[i];
                    let v = f.ring[(i + 1) % n];
                    if u == v {
                        continue;
                    }
                    if let Some(nbrs) = edge_faces.get(&(u.min(v), u.max(v))) {
                        for &g in nbrs {
                            if !seen[g] {
                                seen[g] = true;
                                stack.push(g);
                            }
                        }
                    }
                }
            }
            comp.sort_unstable();
            shells.push(comp);
        }
        shells
    }
}

/// Incremental mesh builder that deduplicates vertices by exact coordinate
/// bits. Both sides of a shared edge must compute corner coordinates through
/// the same arithmetic for the weld to hold, which the extruder guarantees.
#[derive(Default)]
pub struct MeshBuilder {
    mesh: Mesh,
    index: HashMap<(u64, u64, u64), usize>,
}

impl MeshBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, p: Point3) -> usize {
        let key = (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.mesh.vertices.len();
        self.mesh.vertices.push(p);
        self.index.insert(key, i);
        i
    }

    pub fn face(&mut self, ring: Vec<usize>, semantics: Semantics) {
        self.mesh.faces.push(Face { ring, semantics });
    }

    pub fn finish(self) -> Mesh {
        self.mesh
    }
}

/// Axis-aligned box mesh, used by tests as a known-good solid.
pub fn box_mesh(x0: f64, y0: f64, z0: f64, x1: f64, y1: f64, z1: f64) -> Mesh {
    let mut b = MeshBuilder::new();
    let v = |b: &mut MeshBuilder, x, y, z| b.vertex(Point3::new(x, y, z));
    let p000 = v(&mut b, x0, y0, z0);
    let p100 = v(&mut b, x1, y0, z0);
    let p110 = v(&mut b, x1, y1, z0);
    let p010 = v(&mut b, x0, y1, z0);
    let p001 = v(&mut b, x0, y0, z1);
    let p101 = v(&mut b, x1, y0, z1);
    let p111 = v(&mut b, x1, y1, z1);
    let p011 = v(&mut b, x0, y1, z1);
    b.face(vec![p000, p010, p110, p100], Semantics::Ground);
    b.face(vec![p001, p101, p111, p011], Semantics::Roof);
    b.face(vec![p000, p100, p101, p001], Semantics::Wall);
    b.face(vec![p100, p110, p111, p101], Semantics::Wall);
    b.face(vec![p110, p010, p011, p111], Semantics::Wall);
    b.face(vec![p010, p000, p001, p011], Semantics::Wall);
    b.finish()
}
