//! File ingestion: GeoJSON footprints, ASCII "x y z c" point clouds, and
//! per-building point cropping.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fs;
use std::path::Path;

use log::warn;
use serde_json::Value;
use thiserror::Error;

use crate::geom::{Point2, Point3, Polygon2, Ring};

/// Radius around a footprint within which ground points contribute to the
/// ground height estimate, in meters.
pub const GROUND_BUFFER_M: f64 = 4.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("parse error at line {line}: {msg}")]
    ParseErrorAt { line: usize, msg: String },
    #[error("duplicate footprint id {0:?}")]
    DuplicateId(String),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A building's 2D polygon with its stable id and passthrough attributes.
#[derive(Debug, Clone)]
pub struct FootprintRecord {
    pub id: String,
    pub polygon: Polygon2,
    pub attributes: BTreeMap<String, String>,
}

/// Classification of an input point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Ground,
    Building,
    Other,
}

#[derive(Debug, Clone, Copy)]
pub struct PointRecord {
    pub position: Point3,
    pub class: PointClass,
}

/// Class-code mapping for the "x y z c" format. Defaults follow the common
/// aerial-lidar convention (2 = ground, 6 = building).
#[derive(Debug, Clone, Copy)]
pub struct ClassMap {
    pub ground: u32,
    pub building: u32,
}

impl Default for ClassMap {
    fn default() -> Self {
        Self { ground: 2, building: 6 }
    }
}

/// Cropped, classified points for one building.
#[derive(Debug, Clone)]
pub struct BuildingPoints {
    pub building_id: String,
    /// Building-class points whose xy falls inside the footprint.
    pub roof_candidates: Vec<Point3>,
    /// Ground-class points within `GROUND_BUFFER_M` of the footprint.
    pub ground: Vec<Point3>,
}

/// Result of reading a footprint file: records plus the number of skipped
/// non-Polygon features.
#[derive(Debug)]
pub struct FootprintFile {
    pub records: Vec<FootprintRecord>,
    pub skipped_unsupported: usize,
}

pub fn read_footprints(path: &Path) -> Result<FootprintFile, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_footprints_str(&text)
}

/// Parse a GeoJSON FeatureCollection of Polygon features. Each feature needs
/// an "id" property (or top-level id); rings are normalized to exterior-CCW /
/// holes-CW and input order is preserved. Non-Polygon geometries are skipped
/// with a warning and counted.
pub fn read_footprints_str(text: &str) -> Result<FootprintFile, IngestError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| IngestError::ParseError(format!("invalid JSON: {e}")))?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::ParseError(
            "expected a GeoJSON FeatureCollection".into(),
        ));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::ParseError("missing \"features\" array".into()))?;

    let mut records = Vec::new();
    let mut skipped = 0usize;
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, feat) in features.iter().enumerate() {
        let geom = feat
            .get("geometry")
            .ok_or_else(|| IngestError::ParseError(format!("feature {idx}: missing geometry")))?;
        let gtype = geom.get("type").and_then(Value::as_str).unwrap_or("");
        if gtype != "Polygon" {
            warn!("feature {idx}: unsupported geometry type {gtype:?}, skipped");
            skipped += 1;
            continue;
        }
        let id = feature_id(feat)
            .ok_or_else(|| IngestError::ParseError(format!("feature {idx}: missing id")))?;
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId(id));
        }
        let coords = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| IngestError::ParseError(format!("feature {idx}: missing coordinates")))?;
        let mut rings: Vec<Ring> = Vec::new();
        for ring_val in coords {
            let ring = parse_ring(ring_val)
                .map_err(|msg| IngestError::ParseError(format!("feature {idx}: {msg}")))?;
            rings.push(ring);
        }
        if rings.is_empty() {
            return Err(IngestError::ParseError(format!(
                "feature {idx}: polygon has no rings"
            )));
        }
        let mut polygon = Polygon2::new(rings.remove(0), rings);
        polygon.normalize_orientation();
        let attributes = feat
            .get("properties")
            .and_then(Value::as_object)
            .map(|m| {
                m.iter()
                    .map(|(k, v)| {
                        let s = match v {
                            Value::String(s) => s.clone(),
                            other => other.to_string(),
                        };
                        (k.clone(), s)
                    })
                    .collect()
            })
            .unwrap_or_default();
        records.push(FootprintRecord { id, polygon, attributes });
    }
    Ok(FootprintFile { records, skipped_unsupported: skipped })
}

fn feature_id(feat: &Value) -> Option<String> {
    let from_props = feat
        .get("properties")
        .and_then(|p| p.get("id"))
        .and_then(json_scalar_to_string);
    from_props.or_else(|| feat.get("id").and_then(json_scalar_to_string))
}

fn json_scalar_to_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_ring(v: &Value) -> Result<Ring, String> {
    let arr = v.as_array().ok_or("ring is not an array")?;
    let mut ring: Ring = Vec::with_capacity(arr.len());
    for pos in arr {
        let xy = pos.as_array().ok_or("position is not an array")?;
        if xy.len() < 2 {
            return Err("position has fewer than 2 coordinates".into());
        }
        let x = xy[0].as_f64().ok_or("non-numeric coordinate")?;
        let y = xy[1].as_f64().ok_or("non-numeric coordinate")?;
        if !x.is_finite() || !y.is_finite() {
            return Err("non-finite coordinate".into());
        }
        ring.push(Point2::new(x, y));
    }
    // GeoJSON rings repeat the first position at the end; we store it open.
    if ring.len() >= 2 {
        let first = ring[0];
        let last = ring[ring.len() - 1];
        if first.distance(last) <= crate::geom::EPS_COORD {
            ring.pop();
        }
    }
    if ring.len() < 3 {
        return Err("ring has fewer than 3 distinct vertices".into());
    }
    Ok(ring)
}

pub fn read_points(path: &Path, map: ClassMap) -> Result<Vec<PointRecord>, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_points_str(&text, map)
}

/// Parse ASCII points, one per line: "x y z c" with '#' comment lines.
pub fn read_points_str(text: &str, map: ClassMap) -> Result<Vec<PointRecord>, IngestError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_ascii_whitespace();
        let mut next_f64 = |name: &str| -> Result<f64, IngestError> {
            let tok = it.next().ok_or_else(|| IngestError::ParseErrorAt {
                line: i + 1,
                msg: format!("missing {name}"),
            })?;
            let v: f64 = tok.parse().map_err(|_| IngestError::ParseErrorAt {
                line: i + 1,
                msg: format!("invalid {name} {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(IngestError::ParseErrorAt {
                    line: i + 1,
                    msg: format!("non-finite {name}"),
                });
            }
            Ok(v)
        };
        let x = next_f64("x")?;
        let y = next_f64("y")?;
        let z = next_f64("z")?;
        let ctok = it.next().ok_or_else(|| IngestError::ParseErrorAt {
            line: i + 1,
            msg: "missing class code".into(),
        })?;
        let c: u32 = ctok.parse().map_err(|_| IngestError::ParseErrorAt {
            line: i + 1,
            msg: format!("invalid class code {ctok:?}"),
        })?;
        if it.next().is_some() {
            return Err(IngestError::ParseErrorAt {
                line: i + 1,
                msg: "trailing tokens after class code".into(),
            });
        }
        let class = if c == map.ground {
            PointClass::Ground
        } else if c == map.building {
            PointClass::Building
        } else {
            PointClass::Other
        };
        out.push(PointRecord {
            position: Point3::new(x, y, z),
            class,
        });
    }
    Ok(out)
}

/// Crop the shared point set to one building: building-class points inside
/// the footprint become roof candidates; ground-class points within 4 m
/// become the ground sample. Input order is preserved.
pub fn crop_points(fp: &FootprintRecord, points: &[PointRecord]) -> BuildingPoints {
    let (min, max) = fp.polygon.bbox();
    let mut roof = Vec::new();
    let mut ground = Vec::new();
    for rec in points {
        let p = rec.position;
        match rec.class {
            PointClass::Building => {
                if p.x < min.x || p.x > max.x || p.y < min.y || p.y > max.y {
                    continue;
                }
                if fp.polygon.contains(p.xy()) {
                    roof.push(p);
                }
            }
            PointClass::Ground => {
                if p.x < min.x - GROUND_BUFFER_M
                    || p.x > max.x + GROUND_BUFFER_M
                    || p.y < min.y - GROUND_BUFFER_M
                    || p.y > max.y + GROUND_BUFFER_M
                {
                    continue;
                }
                if fp.polygon.distance_to_point(p.xy()) <= GROUND_BUFFER_M {
                    ground.push(p);
                }
            }
            PointClass::Other => {}
        }
    }
    BuildingPoints {
        building_id: fp.id.clone(),
        roof_candidates: roof,
        ground,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ring_signed_area;

    fn fc(features: &str) -> String {
        format!("{{\"type\":\"FeatureCollection\",\"features\":[{features}]}}")
    }

    fn square_feature(id: &str, cw: bool) -> String {
        let ring = if cw {
            "[[0,0],[0,1],[1,1],[1,0],[0,0]]"
        } else {
            "[[0,0],[1,0],[1,1],[0,1],[0,0]]"
        };
        format!(
            "{{\"type\":\"Feature\",\"properties\":{{\"id\":\"{id}\"}},\"geometry\":{{\"type\":\"Polygon\",\"coordinates\":[{ring}]}}}}"
        )
    }

    #[test]
    fn reads_two_footprints_in_order() {
        let text = fc(&format!("{},{}", square_feature("a", false), square_feature("b", false)));
        let f = read_footprints_str(&text).unwrap();
        assert_eq!(f.records.len(), 2);
        assert_eq!(f.records[0].id, "a");
        assert_eq!(f.records[1].id, "b");
        assert_eq!(f.skipped_unsupported, 0);
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = fc(&format!("{},{}", square_feature("a", false), square_feature("a", false)));
        assert!(matches!(
            read_footprints_str(&text),
            Err(IngestError::DuplicateId(_))
        ));
    }

    #[test]
    fn clockwise_exterior_is_normalized() {
        let text = fc(&square_feature("a", true));
        let f = read_footprints_str(&text).unwrap();
        let ring = &f.records[0].polygon.exterior;
        assert!(ring_signed_area(ring) > 0.0, "exterior must be CCW");
        assert!((f.records[0].polygon.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_polygon_skipped_and_counted() {
        let pt = "{\"type\":\"Feature\",\"properties\":{\"id\":\"p\"},\"geometry\":{\"type\":\"Point\",\"coordinates\":[0,0]}}";
        let text = fc(&format!("{},{}", pt, square_feature("a", false)));
        let f = read_footprints_str(&text).unwrap();
        assert_eq!(f.records.len(), 1);
        assert_eq!(f.skipped_unsupported, 1);
    }

    #[test]
    fn points_basic_and_comments() {
        let recs = read_points_str("1.0 2.0 3.0 6\n", ClassMap::default()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].class, PointClass::Building);
        assert_eq!(recs[0].position, Point3::new(1.0, 2.0, 3.0));

        let recs = read_points_str("# header\n0 0 0 2\n", ClassMap::default()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].class, PointClass::Ground);
    }

    #[test]
    fn points_parse_error_carries_line() {
        let err = read_points_str("1.0 2.0 abc 6\n", ClassMap::default()).unwrap_err();
        match err {
            IngestError::ParseErrorAt { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn crop_respects_footprint_and_buffer() {
        let fp = FootprintRecord {
            id: "a".into(),
            polygon: Polygon2::rect(0.0, 0.0, 1.0, 1.0),
            attributes: BTreeMap::new(),
        };
        let mk = |x, y, z, class| PointRecord {
            position: Point3::new(x, y, z),
            class,
        };
        let points = vec![
            mk(0.5, 0.5, 3.0, PointClass::Building),
            mk(5.5, 0.5, 0.0, PointClass::Ground), // distance 4.5 > 4.0
            mk(4.9, 0.5, 0.0, PointClass::Ground), // distance 3.9 <= 4.0
            mk(0.5, 0.5, 0.0, PointClass::Other),
            mk(2.0, 0.5, 3.0, PointClass::Building), // outside footprint
        ];
        let bp = crop_points(&fp, &points);
        assert_eq!(bp.roof_candidates.len(), 1);
        assert_eq!(bp.ground.len(), 1);
        assert_eq!(bp.ground[0].x, 4.9);
    }

    #[test]
    fn crop_is_order_independent_as_a_set() {
        let fp = FootprintRecord {
            id: "a".into(),
            polygon: Polygon2::rect(0.0, 0.0, 10.0, 10.0),
            attributes: BTreeMap::new(),
        };
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut points: Vec<PointRecord> = (0..200)
            .map(|i| {
                let x = (i % 20) as f64;
                let y = (i / 20) as f64;
                PointRecord {
                    position: Point3::new(x, y, 1.0),
                    class: if i % 3 == 0 { PointClass::Ground } else { PointClass::Building },
                }
            })
            .collect();
        let base = crop_points(&fp, &points);
        let key = |p: &Point3| (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
        let mut base_roof: Vec<_> = base.roof_candidates.iter().map(key).collect();
        base_roof.sort_unstable();
        points.shuffle(&mut rng);
        let shuffled = crop_points(&fp, &points);
        let mut shuf_roof: Vec<_> = shuffled.roof_candidates.iter().map(key).collect();
        shuf_roof.sort_unstable();
        assert_eq!(base_roof, shuf_roof);
    }
}
