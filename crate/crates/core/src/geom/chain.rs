use super::Point2;

/// Chain directed planar edges (region on the left of each edge) into simple
/// closed loops of vertex indices. At pinch vertices the continuation making
/// the sharpest clockwise turn from the reversed incoming direction is
/// chosen, which keeps every loop simple and the region on its left:
/// exterior loops come out counter-clockwise, hole loops clockwise.
pub fn chain_loops(points: &[Point2], mut edges: Vec<(usize, usize)>) -> Vec<Vec<usize>> {
    edges.sort_unstable();
    edges.dedup();
    use std::collections::BTreeMap;
    let mut out_edges: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &(u, _)) in edges.iter().enumerate() {
        out_edges.entry(u).or_default().push(i);
    }
    let mut used = vec![false; edges.len()];
    let mut loops = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut lp: Vec<usize> = Vec::new();
        let mut cur = start;
        loop {
            used[cur] = true;
            let (u, v) = edges[cur];
            lp.push(u);
            if v == edges[start].0 && lp.len() >= 2 {
                break;
            }
            let candidates = match out_edges.get(&v) {
                Some(c) => c,
                None => break, // dangling: drop the partial chain
            };
            let unused: Vec<usize> = candidates.iter().copied().filter(|&e| !used[e]).collect();
            let next = match unused.len() {
                0 => break,
                1 => unused[0],
                _ => {
                    let rev = angle(points[v], points[u]);
                    *unused
                        .iter()
                        .min_by(|&&e1, &&e2| {
                            let d1 = cw_delta(rev, angle(points[v], points[edges[e1].1]));
                            let d2 = cw_delta(rev, angle(points[v], points[edges[e2].1]));
                            d1.partial_cmp(&d2).unwrap().then(e1.cmp(&e2))
                        })
                        .unwrap()
                }
            };
            cur = next;
            if lp.len() > edges.len() {
                break; // safety: malformed edge set
            }
        }
        if lp.len() >= 3 {
            let (u, v) = edges[cur];
            if v == lp[0] && u == *lp.last().unwrap() {
                loops.push(lp);
            }
        }
    }
    loops
}

fn angle(from: Point2, to: Point2) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

/// Clockwise angular distance from `a` to `b` in (0, 2*pi].
fn cw_delta(a: f64, b: f64) -> f64 {
    let mut d = a - b;
    while d <= 0.0 {
        d += std::f64::consts::TAU;
    }
    while d > std::f64::consts::TAU {
        d -= std::f64::consts::TAU;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinched_squares_split_into_two_loops() {
        // Two unit squares touching only at the shared vertex 3; a walk
        // reaching the pinch mid-loop has to pick the continuation that
        // stays on its own square.
        let pts = vec![
            Point2::new(-1.0, 0.0),
            Point2::new(-1.0, -1.0),
            Point2::new(0.0, -1.0),
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let edges = vec![
            // SW square CCW.
            (3, 0),
            (0, 1),
            (1, 2),
            (2, 3),
            // NE square CCW.
            (3, 4),
            (4, 5),
            (5, 6),
            (6, 3),
        ];
        let loops = chain_loops(&pts, edges);
        assert_eq!(loops.len(), 2);
        for lp in &loops {
            assert_eq!(lp.len(), 4, "loops must stay simple: {lp:?}");
            assert!(lp.contains(&3));
        }
    }
}
