//! Marching-squares contour extraction on a regular lattice with linear
//! interpolation along cell edges.

use std::collections::HashMap;

use crate::domain::Lattice;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum EdgeId {
    H(usize, usize),
    V(usize, usize),
}

/// Extracts the level-`level` contours of scalar values sampled on the
/// lattice points (row-major, x fastest). Returns polylines; loops are
/// closed implicitly (last vertex connects to the first), and chains that
/// terminate on the lattice border are returned open.
pub fn extract_contours(
    lattice: &Lattice,
    values: &[f64],
    level: f64,
) -> Vec<(Vec<[f64; 2]>, bool)> {
    let [nx, ny] = lattice.npts;
    assert_eq!(values.len(), nx * ny);
    let at = |i: usize, j: usize| values[j * nx + i];
    let above = |i: usize, j: usize| at(i, j) > level;

    // crossing point on an edge, by linear interpolation
    let cross = |a: [f64; 2], va: f64, b: [f64; 2], vb: f64| -> [f64; 2] {
        let t = (level - va) / (vb - va);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    };

    let mut points: HashMap<EdgeId, [f64; 2]> = HashMap::new();
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let flags = [
                above(i, j),
                above(i + 1, j),
                above(i + 1, j + 1),
                above(i, j + 1),
            ];
            if flags.iter().all(|&f| f) || flags.iter().all(|&f| !f) {
                continue;
            }
            // cell edges: (corner index pair, edge id)
            let edges = [
                ((0usize, 1usize), EdgeId::H(i, j)),
                ((1, 2), EdgeId::V(i + 1, j)),
                ((3, 2), EdgeId::H(i, j + 1)),
                ((0, 3), EdgeId::V(i, j)),
            ];
            let mut crossed: Vec<EdgeId> = Vec::with_capacity(4);
            for ((a, b), id) in edges {
                if flags[a] != flags[b] {
                    let (ca, cb) = (corners[a], corners[b]);
                    points.entry(id).or_insert_with(|| {
                        cross(
                            lattice.point(ca.0, ca.1),
                            at(ca.0, ca.1),
                            lattice.point(cb.0, cb.1),
                            at(cb.0, cb.1),
                        )
                    });
                    crossed.push(id);
                }
            }
            match crossed.len() {
                2 => segments.push((crossed[0], crossed[1])),
                4 => {
                    // saddle: resolve by the cell-center average
                    let center = (at(i, j) + at(i + 1, j) + at(i + 1, j + 1) + at(i, j + 1)) / 4.0;
                    // crossed order is [bottom, right, top, left]
                    let (bottom, right, top, left) =
                        (crossed[0], crossed[1], crossed[2], crossed[3]);
                    if (center > level) == flags[0] {
                        // high band joins corners 0 and 2
                        segments.push((bottom, right));
                        segments.push((left, top));
                    } else {
                        segments.push((bottom, left));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }

    // chain segments into polylines
    let mut incidence: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        incidence.entry(*a).or_default().push(k);
        incidence.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a0, b0) = segments[start];
        let mut chain = vec![a0, b0];
        // extend forward from b0, then (if open) backward from a0
        for end in 0..2 {
            loop {
                let tip = *chain.last().unwrap();
                if chain.len() > 2 && tip == chain[0] {
                    break;
                }
                let next = incidence
                    .get(&tip)
                    .and_then(|ks| ks.iter().find(|&&k| !used[k]).copied());
                match next {
                    Some(k) => {
                        used[k] = true;
                        let (a, b) = segments[k];
                        chain.push(if a == tip { b } else { a });
                    }
                    None => break,
                }
            }
            if *chain.last().unwrap() == chain[0] || end == 1 {
                break;
            }
            chain.reverse();
        }
        let closed = chain.len() > 2 && *chain.last().unwrap() == chain[0];
        if closed {
            chain.pop();
        }
        let poly: Vec<[f64; 2]> = chain.iter().map(|e| points[e]).collect();
        if poly.len() >= 2 {
            out.push((poly, closed));
        }
    }
    out
}
