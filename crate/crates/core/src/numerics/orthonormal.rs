//! Random orthonormal bases.

use crate::numerics::matrix::{dot, Matrix};
use crate::numerics::rng::SeededRng;
use rayon::prelude::*;

/// Orthonormalize the given columns in place with twice-iterated classical
/// Gram-Schmidt. Two passes keep the orthonormality defect at roundoff even
/// for nearly dependent inputs.
///
/// Parallelism only distributes independent dot products and row blocks, so
/// the result is bit-identical for any worker count.
pub fn orthonormalize_columns(cols: &mut [Vec<f64>]) {
    let k = cols.len();
    for j in 0..k {
        // Split so earlier columns can be read while column j is mutated.
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for _pass in 0..2 {
            if done.is_empty() {
                break;
            }
            let coeffs: Vec<f64> = done.par_iter().map(|q| dot(q, v)).collect();
            let n = v.len();
            let chunk = n.div_ceil(rayon::current_num_threads().max(1)).max(256);
            v.par_chunks_mut(chunk).enumerate().for_each(|(ci, block)| {
                let offset = ci * chunk;
                let len = block.len();
                for (q, &c) in done.iter().zip(&coeffs) {
                    if c == 0.0 {
                        continue;
                    }
                    for (b, &qv) in block.iter_mut().zip(&q[offset..offset + len]) {
                        *b -= c * qv;
                    }
                }
            });
        }
        let norm = dot(v, v).sqrt();
        assert!(norm > 0.0, "rank-deficient input to orthonormalization");
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Random `d x k` matrix with orthonormal columns: Gram-Schmidt applied to
/// independent standard-normal columns (Haar-distributed on the Stiefel
/// manifold).
pub fn random_orthonormal(d: usize, k: usize, rng: &mut SeededRng) -> Matrix {
    assert!(k <= d, "cannot draw {k} orthonormal columns in dimension {d}");
    let mut cols: Vec<Vec<f64>> = (0..k).map(|_| rng.normal_vec(d)).collect();
    orthonormalize_columns(&mut cols);
    let mut m = Matrix::zeros(d, k);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_are_orthonormal() {
        let mut rng = SeededRng::new(3);
        let q = random_orthonormal(64, 16, &mut rng);
        assert!(q.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn square_case_is_orthogonal() {
        let mut rng = SeededRng::new(4);
        let q = random_orthonormal(32, 32, &mut rng);
        assert!(q.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = random_orthonormal(20, 5, &mut SeededRng::new(9));
        let b = random_orthonormal(20, 5, &mut SeededRng::new(9));
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
