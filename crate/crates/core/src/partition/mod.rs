//! Roof partition: insert regularized lines into the footprint as a planar
//! arrangement, assign one roof plane per face by energy minimization, and
//! dissolve same-label edges into the final roof parts.

pub mod arrangement;
pub mod energy;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::geom::{chain_loops, ring_self_intersects, ring_signed_area, LineSeg2, Point2, Polygon2};

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("invalid footprint: {0}")]
    InvalidFootprint(String),
    #[error("no roof regions")]
    NoRoofRegions,
}

/// One face of the partition. Rings index into `RoofPartition::verts`;
/// exterior counter-clockwise, holes clockwise. The label is the id of the
/// roof region assigned to the face.
#[derive(Debug, Clone)]
pub struct PartFace {
    pub exterior: Vec<usize>,
    pub holes: Vec<Vec<usize>>,
    pub label: Option<usize>,
}

impl PartFace {
    pub fn rings(&self) -> impl Iterator<Item = &Vec<usize>> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }
}

/// Planar subdivision of one footprint with face labels and adjacency.
#[derive(Debug, Clone)]
pub struct RoofPartition {
    pub parent_building: String,
    pub verts: Vec<Point2>,
    pub faces: Vec<PartFace>,
    /// (face, face) with face ids ascending -> shared edge length, meters.
    pub adjacency: BTreeMap<(usize, usize), f64>,
    /// Directed edge (u, v) -> face with the edge on its left.
    pub edge_left: HashMap<(usize, usize), usize>,
}

impl RoofPartition {
    pub fn face_polygon(&self, i: usize) -> Polygon2 {
        let face = &self.faces[i];
        let ring = |ids: &[usize]| ids.iter().map(|&v| self.verts[v]).collect::<Vec<_>>();
        Polygon2::new(ring(&face.exterior), face.holes.iter().map(|h| ring(h)).collect())
    }

    pub fn face_area(&self, i: usize) -> f64 {
        let face = &self.faces[i];
        let mut a = ring_signed_area(
            &face.exterior.iter().map(|&v| self.verts[v]).collect::<Vec<_>>(),
        )
        .abs();
        for h in &face.holes {
            a -= ring_signed_area(&h.iter().map(|&v| self.verts[v]).collect::<Vec<_>>()).abs();
        }
        a
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|i| self.face_area(i)).sum()
    }

    /// The face on the other side of directed edge (u, v), if any.
    pub fn neighbor_across(&self, u: usize, v: usize) -> Option<usize> {
        self.edge_left.get(&(v, u)).copied()
    }
}

/// Build the initial roof partition: every line becomes a full chord of the
/// footprint, the arrangement of chords plus footprint rings is computed
/// with 1e-6 m vertex snapping, and the bounded cells inside the footprint
/// become unlabeled faces.
pub fn build_arrangement(
    parent_building: &str,
    footprint: &Polygon2,
    lines: &[LineSeg2],
) -> Result<RoofPartition, PartitionError> {
    if footprint.exterior.len() < 3 {
        return Err(PartitionError::InvalidFootprint("ring too small".into()));
    }
    if ring_self_intersects(&footprint.exterior) {
        return Err(PartitionError::InvalidFootprint(
            "self-intersecting exterior".into(),
        ));
    }
    let arr = arrangement::build(footprint, lines);
    let faces: Vec<PartFace> = arr
        .cells
        .iter()
        .map(|c| PartFace {
            exterior: c.exterior.clone(),
            holes: c.holes.clone(),
            label: None,
        })
        .collect();
    let mut partition = RoofPartition {
        parent_building: parent_building.to_string(),
        verts: arr.verts,
        faces,
        adjacency: BTreeMap::new(),
        edge_left: arr.edge_left,
    };
    partition.adjacency = compute_adjacency(&partition);
    Ok(partition)
}

fn compute_adjacency(p: &RoofPartition) -> BTreeMap<(usize, usize), f64> {
    let mut adj = BTreeMap::new();
    for (&(u, v), &f) in &p.edge_left {
        if u < v {
            if let Some(&g) = p.edge_left.get(&(v, u)) {
                if f != g {
                    let len = p.verts[u].distance(p.verts[v]);
                    *adj.entry((f.min(g), f.max(g))).or_insert(0.0) += len;
                }
            }
        }
    }
    adj
}

/// Merge groups of faces into one face each. Groups must be edge-connected
/// and cover all faces; the vertex table is shared with the input so merged
/// rings stay compatible with the original arrangement vertices (consecutive
/// collinear vertices are kept on purpose).
pub fn merge_face_groups(
    partition: &RoofPartition,
    groups: &[Vec<usize>],
    labels: &[Option<usize>],
) -> RoofPartition {
    let mut group_of = vec![usize::MAX; partition.faces.len()];
    for (gi, g) in groups.iter().enumerate() {
        for &f in g {
            group_of[f] = gi;
        }
    }
    debug_assert!(group_of.iter().all(|&g| g != usize::MAX));

    let mut faces: Vec<PartFace> = Vec::with_capacity(groups.len());
    for (gi, group) in groups.iter().enumerate() {
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for &f in group {
            for ring in partition.faces[f].rings() {
                let n = ring.len();
                for k in 0..n {
                    let u = ring[k];
                    let v = ring[(k + 1) % n];
                    let twin_group = partition.edge_left.get(&(v, u)).map(|&g| group_of[g]);
                    if twin_group != Some(gi) {
                        boundary.push((u, v));
                    }
                }
            }
        }
        let loops = chain_loops(&partition.verts, boundary);
        let mut exterior: Option<Vec<usize>> = None;
        let mut best_area = 0.0;
        let mut holes: Vec<Vec<usize>> = Vec::new();
        for lp in loops {
            let ring: Vec<Point2> = lp.iter().map(|&i| partition.verts[i]).collect();
            let a = ring_signed_area(&ring);
            if a > 0.0 {
                if a > best_area {
                    if let Some(prev) = exterior.take() {
                        holes.push(prev);
                    }
                    best_area = a;
                    exterior = Some(lp);
                } else {
                    holes.push(lp);
                }
            } else {
                holes.push(lp);
            }
        }
        let mut exterior = exterior.unwrap_or_default();
        rotate_to_min(&mut exterior);
        for h in &mut holes {
            rotate_to_min(h);
        }
        holes.sort();
        faces.push(PartFace { exterior, holes, label: labels[gi] });
    }

    let mut edge_left = HashMap::new();
    for (fi, face) in faces.iter().enumerate() {
        for ring in face.rings() {
            let n = ring.len();
            for k in 0..n {
                edge_left.insert((ring[k], ring[(k + 1) % n]), fi);
            }
        }
    }
    let mut merged = RoofPartition {
        parent_building: partition.parent_building.clone(),
        verts: partition.verts.clone(),
        faces,
        adjacency: BTreeMap::new(),
        edge_left,
    };
    merged.adjacency = compute_adjacency(&merged);
    merged
}

/// Merge faces connected through same-label shared edges; roof parts of the
/// final partition. Labels are preserved; unlabeled faces merge with
/// unlabeled neighbors only.
pub fn dissolve_edges(partition: &RoofPartition) -> RoofPartition {
    let n = partition.faces.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for &(f, g) in partition.adjacency.keys() {
        if partition.faces[f].label == partition.faces[g].label {
            let (rf, rg) = (find(&mut parent, f), find(&mut parent, g));
            if rf != rg {
                parent[rf.max(rg)] = rf.min(rg);
            }
        }
    }
    let mut groups_map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for f in 0..n {
        let r = find(&mut parent, f);
        groups_map.entry(r).or_default().push(f);
    }
    let groups: Vec<Vec<usize>> = groups_map.into_values().collect();
    let labels: Vec<Option<usize>> = groups
        .iter()
        .map(|g| partition.faces[g[0]].label)
        .collect();
    merge_face_groups(partition, &groups, &labels)
}

fn rotate_to_min(ring: &mut Vec<usize>) {
    if ring.is_empty() {
        return;
    }
    let k = ring
        .iter()
        .enumerate()
        .min_by_key(|&(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap();
    ring.rotate_left(k);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> LineSeg2 {
        LineSeg2::new(Point2::new(ax, ay), Point2::new(bx, by))
    }

    #[test]
    fn chord_adjacency_length() {
        let fp = Polygon2::rect(0.0, 0.0, 1.0, 1.0);
        let p = build_arrangement("b", &fp, &[seg(0.2, 0.5, 0.8, 0.5)]).unwrap();
        assert_eq!(p.faces.len(), 2);
        assert_eq!(p.adjacency.len(), 1);
        let len = *p.adjacency.values().next().unwrap();
        assert!((len - 1.0).abs() < 1e-9, "shared edge {len}");
    }

    #[test]
    fn four_quadrants_adjacency() {
        let fp = Polygon2::rect(0.0, 0.0, 1.0, 1.0);
        let p = build_arrangement(
            "b",
            &fp,
            &[seg(0.5, 0.2, 0.5, 0.8), seg(0.2, 0.5, 0.8, 0.5)],
        )
        .unwrap();
        assert_eq!(p.faces.len(), 4);
        assert_eq!(p.adjacency.len(), 4);
        for (&_, &len) in &p.adjacency {
            assert!((len - 0.5).abs() < 1e-9);
        }
        for i in 0..4 {
            assert!((p.face_area(i) - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn bowtie_footprint_rejected() {
        let bow = Polygon2::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
            ],
            Vec::new(),
        );
        assert!(matches!(
            build_arrangement("b", &bow, &[]),
            Err(PartitionError::InvalidFootprint(_))
        ));
    }

    #[test]
    fn dissolve_same_label_pair() {
        let fp = Polygon2::rect(0.0, 0.0, 1.0, 1.0);
        let mut p = build_arrangement("b", &fp, &[seg(0.2, 0.5, 0.8, 0.5)]).unwrap();
        p.faces[0].label = Some(7);
        p.faces[1].label = Some(7);
        let d = dissolve_edges(&p);
        assert_eq!(d.faces.len(), 1);
        assert!((d.face_area(0) - 1.0).abs() < 1e-9);
        assert_eq!(d.faces[0].label, Some(7));
    }

    #[test]
    fn dissolve_keeps_distinct_labels() {
        let fp = Polygon2::rect(0.0, 0.0, 1.0, 1.0);
        let mut p = build_arrangement("b", &fp, &[seg(0.2, 0.5, 0.8, 0.5)]).unwrap();
        p.faces[0].label = Some(1);
        p.faces[1].label = Some(2);
        let d = dissolve_edges(&p);
        assert_eq!(d.faces.len(), 2);
        let total = d.total_area();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dissolve_pinwheel_recovers_footprint() {
        let fp = Polygon2::rect(0.0, 0.0, 1.0, 1.0);
        let mut p = build_arrangement(
            "b",
            &fp,
            &[seg(0.5, 0.2, 0.5, 0.8), seg(0.2, 0.5, 0.8, 0.5)],
        )
        .unwrap();
        for f in &mut p.faces {
            f.label = Some(3);
        }
        let d = dissolve_edges(&p);
        assert_eq!(d.faces.len(), 1);
        assert!((d.face_area(0) - fp.area()).abs() < 1e-9);
    }

    #[test]
    fn dissolve_island_becomes_hole() {
        // 3x3 grid of cells; center cell labeled differently: dissolving the
        // out ring produces a face with one hole.
        let fp = Polygon2::rect(0.0, 0.0, 3.0, 3.0);
        let lines = vec![
            seg(1.0, 0.5, 1.0, 2.5),
            seg(2.0, 0.5, 2.0, 2.5),
            seg(0.5, 1.0, 2.5, 1.0),
            seg(0.5, 2.0, 2.5, 2.0),
        ];
        let mut p = build_arrangement("b", &fp, &lines).unwrap();
        assert_eq!(p.faces.len(), 9);
        let center = (0..9)
            .find(|&i| {
                let c = p.face_polygon(i).centroid();
                (c.x - 1.5).abs() < 0.01 && (c.y - 1.5).abs() < 0.01
            })
            .unwrap();
        for (i, f) in p.faces.iter_mut().enumerate() {
            f.label = if i == center { Some(9) } else { Some(1) };
        }
        let d = dissolve_edges(&p);
        assert_eq!(d.faces.len(), 2);
        let ring_face = d
            .faces
            .iter()
            .position(|f| f.label == Some(1))
            .unwrap();
        assert_eq!(d.faces[ring_face].holes.len(), 1);
        assert!((d.face_area(ring_face) - 8.0).abs() < 1e-9);
        assert!((d.total_area() - 9.0).abs() < 1e-9);
        // Island adjacency to the surrounding face along the full hole ring.
        assert_eq!(d.adjacency.len(), 1);
        let len = *d.adjacency.values().next().unwrap();
        assert!((len - 4.0).abs() < 1e-9, "hole ring length {len}");
    }

    #[test]
    fn dissolve_never_increases_face_count_and_preserves_label_area() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let fp = Polygon2::rect(0.0, 0.0, 4.0, 4.0);
            let k = rng.random_range(0..4);
            let lines: Vec<LineSeg2> = (0..k)
                .map(|_| {
                    seg(
                        rng.random_range(0.2..3.8),
                        rng.random_range(0.2..3.8),
                        rng.random_range(0.2..3.8),
                        rng.random_range(0.2..3.8),
                    )
                })
                .collect();
            let lines: Vec<LineSeg2> = lines
                .into_iter()
                .filter(|s| s.length() > 0.5)
                .collect();
            let Ok(mut p) = build_arrangement("b", &fp, &lines) else { continue };
            for f in &mut p.faces {
                f.label = Some(rng.random_range(0..2));
            }
            let mut area_by_label: BTreeMap<usize, f64> = BTreeMap::new();
            for i in 0..p.faces.len() {
                *area_by_label.entry(p.faces[i].label.unwrap()).or_insert(0.0) +=
                    p.face_area(i);
            }
            let d = dissolve_edges(&p);
            assert!(d.faces.len() <= p.faces.len());
            let mut after: BTreeMap<usize, f64> = BTreeMap::new();
            for i in 0..d.faces.len() {
                *after.entry(d.faces[i].label.unwrap()).or_insert(0.0) += d.face_area(i);
            }
            for (l, a) in &area_by_label {
                let b = after.get(l).copied().unwrap_or(0.0);
                assert!((a - b).abs() < 1e-6, "label {l}: {a} -> {b}");
            }
        }
    }
}
