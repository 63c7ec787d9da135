//! Shared test oracles, independent of the library's solver paths.

use pmlab::numerics::SeededRng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared distance from frame point `y0` to the surface point `r * u`.
fn objective(y0: &[f64], radii: &[f64], u: &[f64]) -> f64 {
    y0.iter()
        .zip(radii)
        .zip(u)
        .map(|((y, r), v)| {
            let d = y - r * v;
            d * d
        })
        .sum()
}

/// Projected gradient descent on the unit sphere for
/// `min_u || y0 - r * u ||^2, ||u|| = 1`, with Armijo backtracking.
fn descend(y0: &[f64], radii: &[f64], start: &[f64]) -> f64 {
    let d = y0.len();
    let mut u: Vec<f64> = start.to_vec();
    let norm = dot(&u, &u).sqrt();
    if norm == 0.0 {
        return f64::INFINITY;
    }
    u.iter_mut().for_each(|v| *v /= norm);

    let mut f = objective(y0, radii, &u);
    let mut eta = 0.1;
    for _ in 0..20_000 {
        // Euclidean gradient -2 r (y0 - r u), projected onto the tangent.
        let mut grad: Vec<f64> = y0
            .iter()
            .zip(radii)
            .zip(&u)
            .map(|((y, r), v)| -2.0 * r * (y - r * v))
            .collect();
        let radial = dot(&grad, &u);
        for (g, &v) in grad.iter_mut().zip(&u) {
            *g -= radial * v;
        }
        let g_norm_sq = dot(&grad, &grad);
        if g_norm_sq < 1e-26 {
            break;
        }
        let mut improved = false;
        for _ in 0..60 {
            let mut cand: Vec<f64> = u
                .iter()
                .zip(&grad)
                .map(|(v, g)| v - eta * g)
                .collect();
            let n = dot(&cand, &cand).sqrt();
            cand.iter_mut().for_each(|v| *v /= n);
            let fc = objective(y0, radii, &cand);
            if fc <= f - 1e-4 * eta * g_norm_sq {
                u = cand;
                f = fc;
                eta = (eta * 1.5).min(1.0);
                improved = true;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
        let _ = d;
    }
    f
}

/// Multistart oracle for the exact point-to-ellipsoid-boundary distance.
///
/// Works in the ellipsoid frame: the basis is given as `d` column vectors
/// of length `ambient`. Starts from the radial direction, its negation,
/// every signed axis, and `n_random` seeded random directions; returns the
/// best value found.
pub fn oracle_boundary_distance(
    point: &[f64],
    center: &[f64],
    basis_cols: &[Vec<f64>],
    radii: &[f64],
    n_random: usize,
    seed: u64,
) -> f64 {
    let d = radii.len();
    let z: Vec<f64> = point.iter().zip(center).map(|(p, c)| p - c).collect();
    let y0: Vec<f64> = basis_cols.iter().map(|col| dot(col, &z)).collect();

    // Perpendicular residual via explicit reconstruction.
    let mut back = vec![0.0; z.len()];
    for (col, &y) in basis_cols.iter().zip(&y0) {
        for (b, &c) in back.iter_mut().zip(col) {
            *b += y * c;
        }
    }
    let d_perp_sq: f64 = z
        .iter()
        .zip(&back)
        .map(|(zi, bi)| (zi - bi) * (zi - bi))
        .sum();

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let radial: Vec<f64> = y0.iter().zip(radii).map(|(y, r)| y / r).collect();
    if dot(&radial, &radial) > 0.0 {
        starts.push(radial.clone());
        starts.push(radial.iter().map(|v| -v).collect());
    }
    for axis in 0..d {
        let mut e = vec![0.0; d];
        e[axis] = 1.0;
        starts.push(e.clone());
        e[axis] = -1.0;
        starts.push(e);
    }
    let mut rng = SeededRng::with_stream(seed, 0x0ac1e);
    for _ in 0..n_random {
        starts.push(rng.normal_vec(d));
    }

    let best = starts
        .iter()
        .map(|s| descend(&y0, radii, s))
        .fold(f64::INFINITY, f64::min);
    (d_perp_sq + best).sqrt()
}
