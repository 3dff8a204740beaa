//! CityJSON 1.1 subset writer and the decoder used for round-trip checks.
//! One file per tile: a shared millimeter-quantized vertex list behind a
//! transform, one Building object per model with up to three Solid
//! geometries (lod 1.2 / 1.3 / 2.2) and semantic surfaces.

use std::collections::HashMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::geom::{Face, Mesh, Point3, Semantics, Solid};

#[derive(Debug, Error)]
pub enum CityJsonError {
    #[error("cityjson error: {0}")]
    Decode(String),
}

const SCALE: f64 = 0.001;

pub struct CityJsonBuilding<'a> {
    pub id: String,
    pub attributes: Map<String, Value>,
    pub lod12: Option<&'a Solid>,
    pub lod13: Option<&'a Solid>,
    pub lod22: Option<&'a Solid>,
}

/// Serialize one tile. The transform translation is the floor of the
/// minimum coordinate over all geometry, so quantization error stays within
/// half a millimeter per coordinate.
pub fn write_cityjson(buildings: &[CityJsonBuilding]) -> Value {
    let mut min = [f64::INFINITY; 3];
    for b in buildings {
        for solid in [b.lod12, b.lod13, b.lod22].into_iter().flatten() {
            for v in &solid.vertices {
                min[0] = min[0].min(v.x);
                min[1] = min[1].min(v.y);
                min[2] = min[2].min(v.z);
            }
        }
    }
    let translate: Vec<f64> = min
        .iter()
        .map(|&m| if m.is_finite() { m.floor() } else { 0.0 })
        .collect();

    let mut vertices: Vec<[i64; 3]> = Vec::new();
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut intern = |p: Point3| -> usize {
        let q = [
            ((p.x - translate[0]) / SCALE).round() as i64,
            ((p.y - translate[1]) / SCALE).round() as i64,
            ((p.z - translate[2]) / SCALE).round() as i64,
        ];
        if let Some(&i) = index.get(&q) {
            return i;
        }
        vertices.push(q);
        index.insert(q, vertices.len() - 1);
        vertices.len() - 1
    };

    let mut city_objects = Map::new();
    let mut sorted: Vec<&CityJsonBuilding> = buildings.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for b in sorted {
        let mut geometry = Vec::new();
        for (lod, solid) in [("1.2", b.lod12), ("1.3", b.lod13), ("2.2", b.lod22)] {
            let Some(solid) = solid else { continue };
            let mut shell = Vec::new();
            let mut values = Vec::new();
            let mut surfaces = Vec::new();
            for face in &solid.faces {
                let ring: Vec<usize> = face.ring.iter().map(|&vi| intern(solid.vertices[vi])).collect();
                if ring.len() < 3 {
                    continue;
                }
                shell.push(json!([ring]));
                values.push(json!(surface_index(face.semantics)));
            }
            for name in ["GroundSurface", "RoofSurface", "WallSurface"] {
                surfaces.push(json!({ "type": name }));
            }
            geometry.push(json!({
                "type": "Solid",
                "lod": lod,
                "boundaries": [shell],
                "semantics": { "surfaces": surfaces, "values": [values] },
            }));
        }
        city_objects.insert(
            b.id.clone(),
            json!({
                "type": "Building",
                "attributes": Value::Object(b.attributes.clone()),
                "geometry": geometry,
            }),
        );
    }

    json!({
        "type": "CityJSON",
        "version": "1.1",
        "transform": { "scale": [SCALE, SCALE, SCALE], "translate": translate },
        "CityObjects": Value::Object(city_objects),
        "vertices": vertices,
    })
}

fn surface_index(s: Semantics) -> usize {
    match s {
        Semantics::Ground => 0,
        Semantics::Roof => 1,
        Semantics::Wall => 2,
    }
}

fn surface_from_index(i: usize) -> Option<Semantics> {
    match i {
        0 => Some(Semantics::Ground),
        1 => Some(Semantics::Roof),
        2 => Some(Semantics::Wall),
        _ => None,
    }
}

/// Decoded building: id plus (lod string, mesh in meters).
pub type DecodedBuilding = (String, Vec<(String, Mesh)>);

/// Decode the subset written by `write_cityjson`, applying the transform
/// back to meters.
pub fn decode_cityjson(doc: &Value) -> Result<Vec<DecodedBuilding>, CityJsonError> {
    let err = |m: &str| CityJsonError::Decode(m.to_string());
    if doc.get("type").and_then(Value::as_str) != Some("CityJSON") {
        return Err(err("not a CityJSON document"));
    }
    let transform = doc.get("transform").ok_or_else(|| err("missing transform"))?;
    let vec3 = |v: &Value, what: &str| -> Result<[f64; 3], CityJsonError> {
        let arr = v.as_array().ok_or_else(|| err(what))?;
        if arr.len() != 3 {
            return Err(err(what));
        }
        let mut out = [0.0; 3];
        for (i, x) in arr.iter().enumerate() {
            out[i] = x.as_f64().ok_or_else(|| err(what))?;
            if !out[i].is_finite() {
                return Err(err(what));
            }
        }
        Ok(out)
    };
    let scale = vec3(transform.get("scale").ok_or_else(|| err("missing scale"))?, "bad scale")?;
    let translate = vec3(
        transform.get("translate").ok_or_else(|| err("missing translate"))?,
        "bad translate",
    )?;
    let raw_vertices = doc
        .get("vertices")
        .and_then(Value::as_array)
        .ok_or_else(|| err("missing vertices"))?;
    let mut vertices: Vec<Point3> = Vec::with_capacity(raw_vertices.len());
    for v in raw_vertices {
        let arr = v.as_array().ok_or_else(|| err("bad vertex"))?;
        if arr.len() != 3 {
            return Err(err("bad vertex"));
        }
        let mut c = [0.0; 3];
        for (i, x) in arr.iter().enumerate() {
            let q = x.as_i64().ok_or_else(|| err("non-integer vertex"))? as f64;
            c[i] = q * scale[i] + translate[i];
        }
        vertices.push(Point3::new(c[0], c[1], c[2]));
    }

    let objects = doc
        .get("CityObjects")
        .and_then(Value::as_object)
        .ok_or_else(|| err("missing CityObjects"))?;
    let mut out = Vec::new();
    for (id, obj) in objects {
        let mut solids = Vec::new();
        let geoms = obj.get("geometry").and_then(Value::as_array).cloned().unwrap_or_default();
        for g in &geoms {
            if g.get("type").and_then(Value::as_str) != Some("Solid") {
                continue;
            }
            let lod = g
                .get("lod")
                .and_then(Value::as_str)
                .ok_or_else(|| err("missing lod"))?
                .to_string();
            let shells = g
                .get("boundaries")
                .and_then(Value::as_array)
                .ok_or_else(|| err("missing boundaries"))?;
            let semantics_values: Vec<Option<usize>> = g
                .get("semantics")
                .and_then(|s| s.get("values"))
                .and_then(Value::as_array)
                .and_then(|outer| outer.first())
                .and_then(Value::as_array)
                .map(|vals| {
                    vals.iter()
                        .map(|v| v.as_u64().map(|u| u as usize))
                        .collect()
                })
                .unwrap_or_default();
            let mut mesh = Mesh::default();
            let mut remap: HashMap<usize, usize> = HashMap::new();
            for shell in shells {
                let faces = shell.as_array().ok_or_else(|| err("bad shell"))?;
                for (fi, face) in faces.iter().enumerate() {
                    let rings = face.as_array().ok_or_else(|| err("bad face"))?;
                    let Some(first) = rings.first() else { continue };
                    let ring_idx = first.as_array().ok_or_else(|| err("bad ring"))?;
                    let mut ring = Vec::with_capacity(ring_idx.len());
                    for v in ring_idx {
                        let gi = v.as_u64().ok_or_else(|| err("bad index"))? as usize;
                        if gi >= vertices.len() {
                            return Err(err("vertex index out of range"));
                        }
                        let li = *remap.entry(gi).or_insert_with(|| {
                            mesh.vertices.push(vertices[gi]);
                            mesh.vertices.len() - 1
                        });
                        ring.push(li);
                    }
                    if ring.len() < 3 {
                        return Err(err("ring with fewer than 3 vertices"));
                    }
                    let semantics = semantics_values
                        .get(fi)
                        .copied()
                        .flatten()
                        .and_then(surface_from_index)
                        .unwrap_or(Semantics::Roof);
                    mesh.faces.push(Face { ring, semantics });
                }
            }
            solids.push((lod, mesh));
        }
        out.push((id.clone(), solids));
    }
    Ok(out)
}
