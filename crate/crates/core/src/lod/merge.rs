//! LoD1.3 part merging: starting from the final roof partition, adjacent
//! parts are merged smallest height gap first while the gap stays under the
//! threshold, recomputing the p70 reference from the merged point set after
//! every step.

use std::collections::BTreeMap;

use crate::partition::{merge_face_groups, RoofPartition};

use super::{percentile, reference_heights, LodError, ReferenceHeights};

/// One merged LoD1.3 part: a set of faces of the final partition with its
/// reference heights.
#[derive(Debug, Clone)]
pub struct Lod13Part {
    /// Face index of the merged face in the returned partition.
    pub face: usize,
    pub heights: ReferenceHeights,
    /// The p70 actually used for extrusion (inherited when no_data).
    pub h_extrusion: f64,
    /// True when the part had no points and inherited its height.
    pub no_data: bool,
}

/// Merge parts of the final partition whose p70 height gap is below
/// `threshold` (meters), smallest gaps first, iterating until no adjacent
/// pair is below it. `face_z` carries the roof z-values falling on each
/// face. Parts without points inherit the height of the neighbor with the
/// longest shared edge before merging starts.
///
/// Returns the merged partition (one face per part) plus per-part heights,
/// parallel to the partition's faces.
pub fn merge_parts_lod13(
    partition: &RoofPartition,
    face_z: &[Vec<f64>],
    threshold: f64,
) -> Result<(RoofPartition, Vec<Lod13Part>), LodError> {
    let n = partition.faces.len();
    if n == 0 {
        return Err(LodError::EmptyInput);
    }
    // Groups keyed by their smallest face id.
    let mut group_of: Vec<usize> = (0..n).collect();
    let mut members: BTreeMap<usize, Vec<usize>> = (0..n).map(|i| (i, vec![i])).collect();
    let mut zs: BTreeMap<usize, Vec<f64>> = (0..n).map(|i| (i, face_z[i].clone())).collect();
    // Group adjacency with summed shared lengths.
    let mut adj: BTreeMap<(usize, usize), f64> = partition.adjacency.clone();

    // Height per group; parts without points inherit from the neighbor with
    // the longest shared edge (resolved iteratively for chains).
    let mut no_data: BTreeMap<usize, bool> = (0..n).map(|i| (i, face_z[i].is_empty())).collect();
    let mut height: BTreeMap<usize, Option<f64>> = (0..n)
        .map(|i| {
            let z = &face_z[i];
            (i, if z.is_empty() { None } else { Some(percentile(z, 70.0).unwrap()) })
        })
        .collect();
    loop {
        let mut progressed = false;
        let unresolved: Vec<usize> = height
            .iter()
            .filter(|(_, h)| h.is_none())
            .map(|(&g, _)| g)
            .collect();
        for g in unresolved {
            let mut best: Option<(f64, usize)> = None;
            for (&(a, b), &len) in &adj {
                let other = if a == g { b } else if b == g { a } else { continue };
                if height[&other].is_some()
                    && best.map_or(true, |(bl, _)| len > bl)
                {
                    best = Some((len, other));
                }
            }
            if let Some((_, donor)) = best {
                height.insert(g, height[&donor]);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    // Isolated no-data parts keep no height and extrude to the ground later;
    // pick 0-gap so they merge with anything adjacent first if possible.

    loop {
        // Smallest height gap among adjacent group pairs.
        let mut best: Option<(f64, usize, usize)> = None;
        for (&(a, b), _) in &adj {
            let (Some(ha), Some(hb)) = (height[&a], height[&b]) else { continue };
            let gap = (ha - hb).abs();
            let key = (a.min(b), a.max(b));
            if best.map_or(true, |(bg, ba, bb)| {
                gap < bg - 1e-12 || ((gap - bg).abs() <= 1e-12 && key < (ba, bb))
            }) {
                best = Some((gap, key.0, key.1));
            }
        }
        let Some((gap, a, b)) = best else { break };
        if gap >= threshold {
            break;
        }
        // Merge b into a.
        let bm = members.remove(&b).unwrap();
        members.get_mut(&a).unwrap().extend(bm);
        let bz = zs.remove(&b).unwrap();
        zs.get_mut(&a).unwrap().extend(bz);
        let a_nodata = no_data[&a] && no_data[&b];
        no_data.insert(a, a_nodata);
        no_data.remove(&b);
        for &f in &members[&a] {
            group_of[f] = a;
        }
        // Rewire adjacency of b to a.
        let old: Vec<((usize, usize), f64)> = adj
            .iter()
            .filter(|(&(x, y), _)| x == b || y == b)
            .map(|(&k, &v)| (k, v))
            .collect();
        for (k, v) in old {
            adj.remove(&k);
            let other = if k.0 == b { k.1 } else { k.0 };
            if other != a {
                *adj.entry((a.min(other), a.max(other))).or_insert(0.0) += v;
            }
        }
        height.remove(&b);
        let merged_z = &zs[&a];
        height.insert(
            a,
            if merged_z.is_empty() { height[&a] } else { Some(percentile(merged_z, 70.0).unwrap()) },
        );
    }

    // Materialize geometry.
    let group_ids: Vec<usize> = members.keys().copied().collect();
    let groups: Vec<Vec<usize>> = group_ids.iter().map(|g| members[g].clone()).collect();
    let labels: Vec<Option<usize>> = group_ids.iter().map(|&g| Some(g)).collect();
    let merged = merge_face_groups(partition, &groups, &labels);

    let mut parts = Vec::with_capacity(group_ids.len());
    for (face, &g) in group_ids.iter().enumerate() {
        let z = &zs[&g];
        let (heights, nd) = match reference_heights(z) {
            Ok(h) => (h, no_data[&g]),
            Err(_) => {
                let h = height[&g].unwrap_or(f64::NAN);
                (ReferenceHeights { h_min: h, h_max: h, h_p50: h, h_p70: h }, true)
            }
        };
        let h_extrusion = height[&g].unwrap_or(heights.h_p70);
        parts.push(Lod13Part { face, heights, h_extrusion, no_data: nd });
    }
    Ok((merged, parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{LineSeg2, Point2, Polygon2};
    use crate::partition::build_arrangement;

    /// Footprint split into `n` vertical strips of width 1.
    fn strip_partition(n: usize) -> RoofPartition {
        let fp = Polygon2::rect(0.0, 0.0, n as f64, 1.0);
        let lines: Vec<LineSeg2> = (1..n)
            .map(|i| LineSeg2::new(Point2::new(i as f64, 0.2), Point2::new(i as f64, 0.8)))
            .collect();
        let mut p = build_arrangement("b", &fp, &lines).unwrap();
        // Order faces west to east for test readability.
        let mut order: Vec<usize> = (0..p.faces.len()).collect();
        order.sort_by(|&a, &b| {
            p.face_polygon(a)
                .centroid()
                .x
                .partial_cmp(&p.face_polygon(b).centroid().x)
                .unwrap()
        });
        assert_eq!(p.faces.len(), n);
        let faces = order.iter().map(|&i| p.faces[i].clone()).collect();
        p.faces = faces;
        // Rebuild derived maps after reordering.
        let mut edge_left = std::collections::HashMap::new();
        for (fi, face) in p.faces.iter().enumerate() {
            for ring in face.rings() {
                let m = ring.len();
                for k in 0..m {
                    edge_left.insert((ring[k], ring[(k + 1) % m]), fi);
                }
            }
        }
        p.edge_left = edge_left;
        let mut adj = std::collections::BTreeMap::new();
        for (&(u, v), &f) in &p.edge_left {
            if u < v {
                if let Some(&g) = p.edge_left.get(&(v, u)) {
                    if f != g {
                        *adj.entry((f.min(g), f.max(g))).or_insert(0.0) +=
                            p.verts[u].distance(p.verts[v]);
                    }
                }
            }
        }
        p.adjacency = adj;
        p
    }

    #[test]
    fn small_gap_merges() {
        let p = strip_partition(2);
        let z = vec![vec![3.0; 10], vec![5.5; 10]];
        let (merged, parts) = merge_parts_lod13(&p, &z, 3.0).unwrap();
        assert_eq!(merged.faces.len(), 1);
        assert_eq!(parts.len(), 1);
    }

    #[test]
    fn large_gap_stays() {
        let p = strip_partition(2);
        let z = vec![vec![3.0; 10], vec![6.5; 10]];
        let (merged, parts) = merge_parts_lod13(&p, &z, 3.0).unwrap();
        assert_eq!(merged.faces.len(), 2);
        assert_eq!(parts.len(), 2);
    }

    #[test]
    fn chain_merge_recomputes_p70() {
        // A(3) - B(5) - C(8): A,B merge (gap 2); merged p70 of ten 3s and
        // ten 5s = 5.0; gap to C is 3.0, not < 3, so two parts remain.
        let p = strip_partition(3);
        let z = vec![vec![3.0; 10], vec![5.0; 10], vec![8.0; 10]];
        let (merged, parts) = merge_parts_lod13(&p, &z, 3.0).unwrap();
        assert_eq!(merged.faces.len(), 2);
        let mut p70s: Vec<f64> = parts.iter().map(|p| p.heights.h_p70).collect();
        p70s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(p70s, vec![5.0, 8.0]);
    }

    #[test]
    fn monotone_in_threshold() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let n = rng.random_range(2..6);
            let p = strip_partition(n);
            let z: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let h = rng.random_range(2.0..12.0);
                    vec![h; 8]
                })
                .collect();
            let mut prev = usize::MAX;
            for th in [0.0, 1.0, 2.5, 4.0, 8.0, 100.0] {
                let (merged, _) = merge_parts_lod13(&p, &z, th).unwrap();
                assert!(
                    merged.faces.len() <= prev,
                    "threshold {th} increased parts"
                );
                prev = merged.faces.len();
            }
        }
    }

    #[test]
    fn no_data_part_inherits_longest_edge_neighbor() {
        let p = strip_partition(3);
        let z = vec![vec![3.0; 10], Vec::new(), vec![9.0; 10]];
        // Middle part has no points; both shared edges have length 1, the
        // tie resolves to the west (lowest pair id) donor, and the merged
        // part keeps p70 = 3.
        let (merged, parts) = merge_parts_lod13(&p, &z, 3.0).unwrap();
        assert_eq!(merged.faces.len(), 2);
        for part in &parts {
            assert!(part.h_extrusion == 3.0 || part.h_extrusion == 9.0);
        }
    }
}
