//! Watertight extrusion of a labeled partition: every face lifted onto its
//! plane, walls along edges where the lifted profiles differ and along the
//! outer boundary down to the ground, plus a reversed ground face. No
//! internal walls where lifted edges coincide.
//!
//! Mesh faces are single rings; faces with holes get a zero-width slit so
//! every face is a disk and the Euler count stays meaningful. Shared corners
//! are computed once per (face, vertex) and welded bit-exactly, with
//! near-coincident plane heights (within 1e-6 m) snapped together at each
//! vertex so hairline walls never appear.

use std::collections::{BTreeMap, HashMap};

use crate::geom::{chain_loops, segments_intersect, MeshBuilder, Plane, Point2, Point3, Semantics, Solid};
use crate::partition::{PartFace, RoofPartition};

use super::LodError;

/// Roof planes flatter than this |nz| cannot be expressed as z(x, y).
const MIN_NZ: f64 = 0.01;
/// Lifted edges closer than this merge instead of growing a wall.
const COINCIDE_EPS: f64 = 1e-6;

pub struct ExtrudeSpec<'a> {
    pub partition: &'a RoofPartition,
    /// Lifting plane per face, parallel to `partition.faces`.
    pub face_planes: &'a [Plane],
    pub ground_h: f64,
}

pub fn extrude_parts(spec: &ExtrudeSpec) -> Result<Solid, LodError> {
    for plane in spec.face_planes {
        if plane.normal[2].abs() < MIN_NZ {
            return Err(LodError::NonVerticalizablePlane { nz: plane.normal[2] });
        }
    }

    // Split interior edges where the two lifted profiles cross, so each
    // (sub)edge has one side uniformly on top.
    let (partition, face_planes) = split_crossing_edges(spec.partition, spec.face_planes);

    // One z per (face, vertex), then per-vertex single-linkage snapping of
    // near-equal heights so shared corners weld bit-exactly.
    let mut by_vertex: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (fi, face) in partition.faces.iter().enumerate() {
        for ring in face.rings() {
            for &v in ring {
                let list = by_vertex.entry(v).or_default();
                if !list.iter().any(|&(f, _)| f == fi) {
                    list.push((fi, face_planes[fi].z_at(partition.verts[v])));
                }
            }
        }
    }
    let mut z_of: HashMap<(usize, usize), f64> = HashMap::new();
    for (&v, entries) in &by_vertex {
        let mut sorted = entries.clone();
        sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        let mut k = 0;
        while k < sorted.len() {
            let mut end = k + 1;
            while end < sorted.len() && sorted[end].1 - sorted[end - 1].1 <= COINCIDE_EPS {
                end += 1;
            }
            let snapped = sorted[k].1;
            for e in &sorted[k..end] {
                z_of.insert((e.0, v), snapped);
            }
            k = end;
        }
    }

    // All distinct z-levels per 2D vertex (snapped face heights plus the
    // ground wherever the vertex touches the outer boundary). Wall side
    // edges are subdivided at every level they span, so stacked walls
    // meeting along one vertical line share identical edge chains.
    let mut levels: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (&v, entries) in &by_vertex {
        let mut zs: Vec<f64> = entries.iter().map(|&(f, _)| z_of[&(f, v)]).collect();
        zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        zs.dedup();
        levels.insert(v, zs);
    }
    for face in &partition.faces {
        for ring in face.rings() {
            let n = ring.len();
            for k in 0..n {
                let u = ring[k];
                let v = ring[(k + 1) % n];
                if partition.neighbor_across(u, v).is_none() {
                    for w in [u, v] {
                        let zs = levels.get_mut(&w).unwrap();
                        if zs.iter().all(|&z| z != spec.ground_h) {
                            zs.push(spec.ground_h);
                            zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        }
                    }
                }
            }
        }
    }

    let mut builder = MeshBuilder::new();
    let lift = |builder: &mut MeshBuilder, v: usize, z: f64| -> usize {
        let p = partition.verts[v];
        builder.vertex(Point3::new(p.x, p.y, z))
    };
    // Vertical chain at vertex v from z_from to z_to, inserting every level
    // strictly between; includes the destination, excludes the start.
    let vertical_run = |builder: &mut MeshBuilder,
                        ring: &mut Vec<usize>,
                        levels: &BTreeMap<usize, Vec<f64>>,
                        v: usize,
                        z_from: f64,
                        z_to: f64| {
        let lv = &levels[&v];
        if z_to > z_from {
            for &z in lv.iter() {
                if z > z_from && z < z_to {
                    ring.push(lift(builder, v, z));
                }
            }
        } else {
            for &z in lv.iter().rev() {
                if z < z_from && z > z_to {
                    ring.push(lift(builder, v, z));
                }
            }
        }
        ring.push(lift(builder, v, z_to));
    };

    // Roof faces.
    for (fi, face) in partition.faces.iter().enumerate() {
        let ring2d = slit_face(&partition.verts, face);
        let ring3d: Vec<usize> = ring2d
            .iter()
            .map(|&v| lift(&mut builder, v, z_of[&(fi, v)]))
            .collect();
        builder.face(dedup_ring(ring3d), Semantics::Roof);
    }

    // Walls. Each directed edge (u, v) has its face on the left; emit from
    // the higher side so every wall appears exactly once.
    for (fi, face) in partition.faces.iter().enumerate() {
        for ring in face.rings() {
            let n = ring.len();
            for k in 0..n {
                let u = ring[k];
                let v = ring[(k + 1) % n];
                let (z_top_u, z_top_v) = (z_of[&(fi, u)], z_of[&(fi, v)]);
                let (z_bot_u, z_bot_v) = match partition.neighbor_across(u, v) {
                    Some(g) => {
                        let (zgu, zgv) = (z_of[&(g, u)], z_of[&(g, v)]);
                        let here = z_top_u + z_top_v;
                        let there = zgu + zgv;
                        if here < there || (here == there && fi > g) {
                            continue; // the neighbor emits this wall
                        }
                        if here == there {
                            continue; // coincident after snapping: no wall
                        }
                        (zgu, zgv)
                    }
                    None => (spec.ground_h, spec.ground_h),
                };
                // Bottom-first so the top run opposes the roof ring and the
                // normal points away from the higher part.
                let mut wall: Vec<usize> = Vec::with_capacity(6);
                wall.push(lift(&mut builder, u, z_bot_u));
                wall.push(lift(&mut builder, v, z_bot_v));
                vertical_run(&mut builder, &mut wall, &levels, v, z_bot_v, z_top_v);
                wall.push(lift(&mut builder, u, z_top_u));
                vertical_run(&mut builder, &mut wall, &levels, u, z_top_u, z_bot_u);
                let wall = dedup_ring(wall);
                if wall.len() >= 3 {
                    builder.face(wall, Semantics::Wall);
                }
            }
        }
    }

    // Ground: outer boundary of the partition (footprint rings carrying all
    // arrangement vertices), reversed, at ground height.
    let mut outer_edges: Vec<(usize, usize)> = Vec::new();
    for face in &partition.faces {
        for ring in face.rings() {
            let n = ring.len();
            for k in 0..n {
                let u = ring[k];
                let v = ring[(k + 1) % n];
                if partition.neighbor_across(u, v).is_none() {
                    outer_edges.push((u, v));
                }
            }
        }
    }
    let loops = chain_loops(&partition.verts, outer_edges);
    let mut exterior: Option<Vec<usize>> = None;
    let mut holes: Vec<Vec<usize>> = Vec::new();
    let mut best = 0.0;
    for lp in loops {
        let pts: Vec<Point2> = lp.iter().map(|&i| partition.verts[i]).collect();
        let a = crate::geom::ring_signed_area(&pts);
        if a > best {
            if let Some(prev) = exterior.take() {
                holes.push(prev);
            }
            best = a;
            exterior = Some(lp);
        } else {
            holes.push(lp);
        }
    }
    let mut ground_face = PartFace {
        exterior: exterior.unwrap_or_default(),
        holes,
        label: None,
    };
    // Reverse for a downward normal; holes flip orientation with it.
    ground_face.exterior.reverse();
    for h in &mut ground_face.holes {
        h.reverse();
    }
    let ring2d = slit_face(&partition.verts, &ground_face);
    let ring3d: Vec<usize> = ring2d
        .iter()
        .map(|&v| lift(&mut builder, v, spec.ground_h))
        .collect();
    builder.face(dedup_ring(ring3d), Semantics::Ground);

    Ok(builder.finish())
}

fn dedup_ring(mut ring: Vec<usize>) -> Vec<usize> {
    ring.dedup();
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring
}

/// Insert a vertex into both incident face rings wherever two adjacent
/// lifted profiles cross between the endpoints of a shared edge; afterwards
/// every shared (sub)edge has one side uniformly on top. Returns an owned
/// partition (vertex table may grow) with planes re-indexed alongside.
fn split_crossing_edges(
    partition: &RoofPartition,
    face_planes: &[Plane],
) -> (RoofPartition, Vec<Plane>) {
    let mut part = partition.clone();
    let planes = face_planes.to_vec();
    // Canonical edge order keeps vertex ids reproducible.
    let mut canonical: Vec<(usize, usize, usize)> = partition
        .edge_left
        .iter()
        .filter(|&(&(u, v), _)| u < v)
        .map(|(&(u, v), &f)| (u, v, f))
        .collect();
    canonical.sort_unstable();
    let mut insertions: Vec<(usize, usize, Point2)> = Vec::new(); // (u, v, point)
    for (u, v, f) in canonical {
        let Some(&g) = partition.edge_left.get(&(v, u)) else { continue };
        let pu = partition.verts[u];
        let pv = partition.verts[v];
        let du = planes[f].z_at(pu) - planes[g].z_at(pu);
        let dv = planes[f].z_at(pv) - planes[g].z_at(pv);
        if du.abs() > COINCIDE_EPS && dv.abs() > COINCIDE_EPS && du.signum() != dv.signum() {
            let t = du / (du - dv);
            insertions.push((
                u,
                v,
                Point2::new(pu.x + t * (pv.x - pu.x), pu.y + t * (pv.y - pu.y)),
            ));
        }
    }
    if insertions.is_empty() {
        return (part, planes);
    }
    for (u, v, p) in insertions {
        let w = part.verts.len();
        part.verts.push(p);
        for face in &mut part.faces {
            let rings: Vec<&mut Vec<usize>> = std::iter::once(&mut face.exterior)
                .chain(face.holes.iter_mut())
                .collect();
            for ring in rings {
                let n = ring.len();
                let mut insert_at = None;
                for k in 0..n {
                    let a = ring[k];
                    let b = ring[(k + 1) % n];
                    if (a, b) == (u, v) || (a, b) == (v, u) {
                        insert_at = Some(k + 1);
                        break;
                    }
                }
                if let Some(at) = insert_at {
                    ring.insert(at, w);
                }
            }
        }
        // Update the directed edge map for subsequent lookups.
        let fl = part.edge_left.remove(&(u, v));
        let fr = part.edge_left.remove(&(v, u));
        if let Some(f) = fl {
            part.edge_left.insert((u, w), f);
            part.edge_left.insert((w, v), f);
        }
        if let Some(g) = fr {
            part.edge_left.insert((v, w), g);
            part.edge_left.insert((w, u), g);
        }
    }
    (part, planes)
}

/// Turn a face with holes into a single ring by cutting a zero-width slit
/// from each hole to the outer ring (or to an already-attached hole). The
/// bridge must not cross any ring edge.
fn slit_face(verts: &[Point2], face: &PartFace) -> Vec<usize> {
    let mut compound = face.exterior.clone();
    if face.holes.is_empty() {
        return compound;
    }
    let mut pending: Vec<Vec<usize>> = face.holes.clone();
    // Attach nearest holes first for stable, short bridges.
    while !pending.is_empty() {
        let mut best: Option<(f64, usize, usize, usize)> = None; // d, hole, ci, hi
        for (h_idx, hole) in pending.iter().enumerate() {
            for (ci, &cv) in compound.iter().enumerate() {
                for (hi, &hv) in hole.iter().enumerate() {
                    let d = verts[cv].distance(verts[hv]);
                    if best.map_or(true, |(bd, ..)| d < bd)
                        && bridge_clear(verts, cv, hv, &compound, &pending)
                    {
                        best = Some((d, h_idx, ci, hi));
                    }
                }
            }
        }
        let (_, h_idx, ci, hi) = match best {
            Some(b) => b,
            // No crossing-free bridge found (degenerate nesting): fall back
            // to the closest pair outright.
            None => {
                let mut fallback = (f64::INFINITY, 0, 0, 0);
                for (h_idx, hole) in pending.iter().enumerate() {
                    for (ci, &cv) in compound.iter().enumerate() {
                        for (hi, &hv) in hole.iter().enumerate() {
                            let d = verts[cv].distance(verts[hv]);
                            if d < fallback.0 {
                                fallback = (d, h_idx, ci, hi);
                            }
                        }
                    }
                }
                fallback
            }
        };
        let hole = pending.remove(h_idx);
        // compound: [.. cv] ++ [hv, hole walk.., hv, cv] ++ [cv+1 ..]
        let mut new_ring: Vec<usize> = Vec::with_capacity(compound.len() + hole.len() + 2);
        new_ring.extend_from_slice(&compound[..=ci]);
        for off in 0..hole.len() {
            new_ring.push(hole[(hi + off) % hole.len()]);
        }
        new_ring.push(hole[hi]);
        new_ring.push(compound[ci]);
        new_ring.extend_from_slice(&compound[ci + 1..]);
        compound = new_ring;
    }
    compound
}

/// True if segment cv-hv keeps clear of every ring edge except at its own
/// endpoints.
fn bridge_clear(
    verts: &[Point2],
    cv: usize,
    hv: usize,
    compound: &[usize],
    pending: &[Vec<usize>],
) -> bool {
    let a = verts[cv];
    let b = verts[hv];
    let mut check_ring = |ring: &[usize]| -> bool {
        let n = ring.len();
        for k in 0..n {
            let p = ring[k];
            let q = ring[(k + 1) % n];
            if p == cv || q == cv || p == hv || q == hv {
                // Edges incident to the bridge endpoints may touch at the
                // endpoint; a proper overlap would be caught by the others.
                continue;
            }
            if segments_intersect(a, b, verts[p], verts[q]) {
                return false;
            }
        }
        true
    };
    if !check_ring(compound) {
        return false;
    }
    for hole in pending {
        if !check_ring(hole) {
            return false;
        }
    }
    true
}
