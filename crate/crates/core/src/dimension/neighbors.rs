//! Exact first/second nearest-neighbor distances.
//!
//! Brute force for moderate N, a vantage-point tree with triangle-inequality
//! pruning above [`BRUTE_FORCE_LIMIT`]. Both paths return exact distances;
//! the tree only changes the amount of work.

use rayon::prelude::*;

/// Largest N handled by the quadratic scan.
pub const BRUTE_FORCE_LIMIT: usize = 20_000;

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Euclidean distances to the first and second nearest neighbors of every
/// point (excluding the point itself). Requires at least 3 points.
pub fn two_nearest_distances(data: &[f64], dim: usize) -> Vec<(f64, f64)> {
    let n = data.len() / dim;
    assert!(n >= 3, "need at least 3 points for two neighbors");
    if n <= BRUTE_FORCE_LIMIT {
        brute_force(data, dim, n)
    } else {
        vp_tree(data, dim, n)
    }
}

fn brute_force(data: &[f64], dim: usize, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let qi = &data[i * dim..(i + 1) * dim];
            let mut best = (f64::INFINITY, f64::INFINITY);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = sq_dist(qi, &data[j * dim..(j + 1) * dim]);
                if d < best.0 {
                    best = (d, best.0);
                } else if d < best.1 {
                    best.1 = d;
                }
            }
            (best.0.sqrt(), best.1.sqrt())
        })
        .collect()
}

struct VpNode {
    point: usize,
    radius: f64,
    inside: Option<Box<VpNode>>,
    outside: Option<Box<VpNode>>,
}

fn build_vp(indices: &mut [usize], data: &[f64], dim: usize) -> Option<Box<VpNode>> {
    let (&vantage, rest) = indices.split_first()?;
    if rest.is_empty() {
        return Some(Box::new(VpNode {
            point: vantage,
            radius: 0.0,
            inside: None,
            outside: None,
        }));
    }
    let vp_row = &data[vantage * dim..(vantage + 1) * dim];
    let mut with_dist: Vec<(f64, usize)> = rest
        .iter()
        .map(|&j| (sq_dist(vp_row, &data[j * dim..(j + 1) * dim]), j))
        .collect();
    // Stable order: by distance, ties by index, so builds are reproducible.
    with_dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let half = with_dist.len() / 2;
    let radius = with_dist[half].0.sqrt();
    let mut inner: Vec<usize> = with_dist[..half].iter().map(|p| p.1).collect();
    let mut outer: Vec<usize> = with_dist[half..].iter().map(|p| p.1).collect();
    Some(Box::new(VpNode {
        point: vantage,
        radius,
        inside: build_vp(&mut inner, data, dim),
        outside: build_vp(&mut outer, data, dim),
    }))
}

fn search_vp(
    node: &VpNode,
    query: &[f64],
    skip: usize,
    data: &[f64],
    dim: usize,
    best: &mut (f64, f64),
) {
    let p_row = &data[node.point * dim..(node.point + 1) * dim];
    let d = sq_dist(query, p_row).sqrt();
    if node.point != skip {
        if d < best.0 {
            *best = (d, best.0);
        } else if d < best.1 {
            best.1 = d;
        }
    }
    let (first, second) = if d < node.radius {
        (&node.inside, &node.outside)
    } else {
        (&node.outside, &node.inside)
    };
    if let Some(child) = first {
        search_vp(child, query, skip, data, dim, best);
    }
    if let Some(child) = second {
        // The untaken side can only matter within the current second-best
        // distance of the splitting shell.
        if (d - node.radius).abs() <= best.1 {
            search_vp(child, query, skip, data, dim, best);
        }
    }
}

fn vp_tree(data: &[f64], dim: usize, n: usize) -> Vec<(f64, f64)> {
    let mut indices: Vec<usize> = (0..n).collect();
    let root = build_vp(&mut indices, data, dim).expect("nonempty tree");
    (0..n)
        .into_par_iter()
        .map(|i| {
            let q = &data[i * dim..(i + 1) * dim];
            let mut best = (f64::INFINITY, f64::INFINITY);
            search_vp(&root, q, i, data, dim, &mut best);
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::SeededRng;

    #[test]
    fn tree_matches_brute_force() {
        let mut rng = SeededRng::new(17);
        let n = 500;
        let dim = 6;
        let data: Vec<f64> = (0..n * dim).map(|_| rng.uniform()).collect();
        let bf = brute_force(&data, dim, n);
        let vp = vp_tree(&data, dim, n);
        for (a, b) in bf.iter().zip(&vp) {
            assert!((a.0 - b.0).abs() < 1e-12);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_points_by_hand() {
        // Points 0, 1, 3 on a line.
        let data = vec![0.0, 1.0, 3.0];
        let d = brute_force(&data, 1, 3);
        assert_eq!(d[0], (1.0, 3.0));
        assert_eq!(d[1], (1.0, 2.0));
        assert_eq!(d[2], (2.0, 3.0));
    }
}
