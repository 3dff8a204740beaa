//! Wavefront OBJ export and the matching parser used for round-trip
//! validation. One file per tile per LoD: an `o <id>` record per building,
//! `g Ground|Roof|Wall` group records, vertices deduplicated on their
//! millimeter-rounded coordinates and emitted in first-use order.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geom::{Mesh, Point3, Semantics, Solid};

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("obj parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn mm_key(p: Point3) -> (i64, i64, i64) {
    (
        (p.x * 1000.0).round() as i64,
        (p.y * 1000.0).round() as i64,
        (p.z * 1000.0).round() as i64,
    )
}

/// Serialize buildings (id, solid) into one OBJ document. Buildings come
/// out in ascending id order; vertex indices are 1-based and shared across
/// the whole file.
pub fn write_obj(models: &[(String, &Solid)]) -> String {
    let mut sorted: Vec<&(String, &Solid)> = models.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::new();
    let mut index: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut next = 1usize;
    for (id, solid) in sorted {
        writeln!(out, "o {id}").unwrap();
        for class in [Semantics::Ground, Semantics::Roof, Semantics::Wall] {
            let faces: Vec<_> = solid
                .faces
                .iter()
                .filter(|f| f.semantics == class)
                .collect();
            if faces.is_empty() {
                continue;
            }
            writeln!(out, "g {}", semantics_name(class)).unwrap();
            for face in faces {
                let mut indices = Vec::with_capacity(face.ring.len());
                for &vi in &face.ring {
                    let p = solid.vertices[vi];
                    let key = mm_key(p);
                    let idx = *index.entry(key).or_insert_with(|| {
                        writeln!(out, "v {} {} {}", p.x, p.y, p.z).unwrap();
                        let i = next;
                        next += 1;
                        i
                    });
                    indices.push(idx);
                }
                indices.dedup();
                while indices.len() > 1 && indices.first() == indices.last() {
                    indices.pop();
                }
                if indices.len() < 3 {
                    continue;
                }
                write!(out, "f").unwrap();
                for i in indices {
                    write!(out, " {i}").unwrap();
                }
                writeln!(out).unwrap();
            }
        }
    }
    out
}

fn semantics_name(s: Semantics) -> &'static str {
    match s {
        Semantics::Ground => "Ground",
        Semantics::Roof => "Roof",
        Semantics::Wall => "Wall",
    }
}

fn semantics_from(name: &str) -> Option<Semantics> {
    match name {
        "Ground" => Some(Semantics::Ground),
        "Roof" => Some(Semantics::Roof),
        "Wall" => Some(Semantics::Wall),
        _ => None,
    }
}

/// Parse the subset of OBJ this tool writes: v/f/o/g records, polygon faces,
/// absolute 1-based indices. Returns per-building meshes in file order.
pub fn parse_obj(text: &str) -> Result<Vec<(String, Mesh)>, ObjError> {
    let mut vertices: Vec<Point3> = Vec::new();
    let mut buildings: Vec<(String, Mesh)> = Vec::new();
    let mut semantics = Semantics::Roof;
    // Per-building remap of global vertex index -> local index.
    let mut remap: HashMap<usize, usize> = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let err = |msg: &str| ObjError::Parse { line: lineno + 1, msg: msg.to_string() };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_ascii_whitespace();
        match it.next() {
            Some("v") => {
                let mut coord = || -> Result<f64, ObjError> {
                    let t = it.next().ok_or_else(|| err("missing coordinate"))?;
                    let v: f64 = t.parse().map_err(|_| err("bad coordinate"))?;
                    if !v.is_finite() {
                        return Err(err("non-finite coordinate"));
                    }
                    Ok(v)
                };
                let (x, y, z) = (coord()?, coord()?, coord()?);
                vertices.push(Point3::new(x, y, z));
            }
            Some("o") => {
                let id = it.next().ok_or_else(|| err("missing object name"))?;
                buildings.push((id.to_string(), Mesh::default()));
                remap.clear();
                semantics = Semantics::Roof;
            }
            Some("g") => {
                let name = it.next().ok_or_else(|| err("missing group name"))?;
                semantics = semantics_from(name).ok_or_else(|| err("unknown group"))?;
            }
            Some("f") => {
                let target = buildings.last_mut().ok_or_else(|| err("face before object"))?;
                let mut ring = Vec::new();
                for tok in it.by_ref() {
                    // Accept the common `idx/..` forms but only use the
                    // vertex index.
                    let head = tok.split('/').next().unwrap_or("");
                    let idx: i64 = head.parse().map_err(|_| err("bad face index"))?;
                    if idx == 0 {
                        return Err(err("zero face index"));
                    }
                    let gi = if idx > 0 {
                        (idx - 1) as usize
                    } else {
                        let back = (-idx) as usize;
                        if back > vertices.len() {
                            return Err(err("relative index out of range"));
                        }
                        vertices.len() - back
                    };
                    if gi >= vertices.len() {
                        return Err(err("face index out of range"));
                    }
                    let mesh = &mut target.1;
                    let li = *remap.entry(gi).or_insert_with(|| {
                        mesh.vertices.push(vertices[gi]);
                        mesh.vertices.len() - 1
                    });
                    ring.push(li);
                }
                if ring.len() < 3 {
                    return Err(err("face with fewer than 3 vertices"));
                }
                target.1.faces.push(crate::geom::Face { ring, semantics });
            }
            // Ignore other record types (vn, vt, usemtl, ...).
            Some(_) => {}
            None => {}
        }
    }
    Ok(buildings)
}
