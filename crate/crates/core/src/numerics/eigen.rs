//! Symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by the implicit-shift
//! QL iteration, with eigenvector accumulation. The classic dense path for
//! full spectra, arranged so every O(n^3) loop streams contiguous rows:
//! the symmetric matvec works on the packed lower triangle, the transform
//! accumulation is a row-streamed rank-1 update, and eigenvectors live in
//! transposed (row-per-vector) storage during the QL rotations. Row updates
//! fan out over rayon in fixed chunks, so results stay bit-identical for
//! any worker count.
//!
//! Output convention: eigenvalues sorted descending, eigenvectors as the
//! matching orthonormal columns. Ties are broken by stable sort order, and
//! each eigenvector's sign is canonicalized so its largest-magnitude entry
//! is positive, making repeated runs bit-identical.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use rayon::prelude::*;

/// Row count above which the rank-2 updates and rotations use rayon.
const PAR_THRESHOLD: usize = 256;

/// Full spectrum of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the eigenvector of `eigenvalues[j]`.
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// Relative Frobenius residual of `Q L Q^T` against `original`.
    pub fn reconstruction_residual(&self, original: &Matrix) -> f64 {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let mut recon = Matrix::zeros(n, n);
        for k in 0..n {
            let lambda = self.eigenvalues[k];
            if lambda == 0.0 {
                continue;
            }
            let col: Vec<f64> = (0..n).map(|i| q.get(i, k)).collect();
            for i in 0..n {
                let ci = lambda * col[i];
                let row = recon.row_mut(i);
                for (r, &cj) in row.iter_mut().zip(&col) {
                    *r += ci * cj;
                }
            }
        }
        let mut diff_sq = 0.0;
        for i in 0..n {
            for (r, o) in recon.row(i).iter().zip(original.row(i)) {
                let d = r - o;
                diff_sq += d * d;
            }
        }
        let norm = original.frobenius_norm();
        if norm == 0.0 {
            diff_sq.sqrt()
        } else {
            diff_sq.sqrt() / norm
        }
    }
}

/// Eigendecomposition of a symmetric matrix.
///
/// The input must be square and symmetric within `1e-10` (relative to its
/// largest entry); otherwise an invalid-input error is returned.
pub fn sym_eig(m: &Matrix) -> Result<EigenDecomposition> {
    let n = m.rows();
    if n == 0 || m.cols() != n {
        return Err(Error::invalid("sym_eig requires a nonempty square matrix"));
    }
    let scale = m.max_abs().max(1.0);
    if m.asymmetry() > 1e-10 * scale {
        return Err(Error::invalid(format!(
            "matrix is not symmetric: max |a_ij - a_ji| = {:.3e}",
            m.asymmetry()
        )));
    }

    let mut a: Vec<f64> = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    tridiagonalize(&mut a, &mut d, &mut e, n);
    // Eigenvectors in transposed storage: row j accumulates vector j.
    let mut zt = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            zt[c * n + r] = a[r * n + c];
        }
    }
    ql_implicit(&mut d, &mut e, &mut zt, n)?;

    // Sort descending; stable in the original index for equal eigenvalues.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut q = Matrix::zeros(n, n);
    for (new_col, &old) in order.iter().enumerate() {
        let vec_row = &zt[old * n..(old + 1) * n];
        // Sign convention: largest-magnitude entry positive.
        let mut pivot = 0usize;
        let mut best = 0.0f64;
        for (i, &v) in vec_row.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                pivot = i;
            }
        }
        let flip = if vec_row[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (i, &v) in vec_row.iter().enumerate() {
            q.set(i, new_col, flip * v);
        }
    }

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: q,
    })
}

/// Symmetric matvec `w = A u` reading only the lower triangle of the
/// leading `len x len` block, streaming rows.
fn sym_matvec_lower(a: &[f64], n: usize, len: usize, u: &[f64], w: &mut [f64]) {
    w[..len].iter_mut().for_each(|x| *x = 0.0);
    for j in 0..len {
        let row = &a[j * n..j * n + j];
        let uj = u[j];
        let mut acc = 0.0;
        for (k, &ajk) in row.iter().enumerate() {
            acc += ajk * u[k];
            w[k] += ajk * uj;
        }
        w[j] += acc + a[j * n + j] * uj;
    }
}

/// Householder reduction of a symmetric matrix (flat row-major `a`) to
/// tridiagonal form; `a` is overwritten with the accumulated orthogonal
/// transformation, `d` receives the diagonal and `e` the subdiagonal.
fn tridiagonalize(a: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    let mut u = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = a[i * n..i * n + l + 1].iter().map(|v| v.abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                u[..=l].copy_from_slice(&a[i * n..i * n + l + 1]);

                // w = A u over the active block, then e = w/h and the
                // Householder correction.
                sym_matvec_lower(a, n, l + 1, &u, &mut w);
                let mut f_acc = 0.0;
                for j in 0..=l {
                    a[j * n + i] = u[j] / h;
                    e[j] = w[j] / h;
                    f_acc += e[j] * u[j];
                }
                // Rank-2 update of the lower triangle:
                // A -= u e'^T + e' u^T with e' = e - hh u.
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    e[j] -= hh * u[j];
                }
                let update_row = |j: usize, row: &mut [f64]| {
                    let fj = u[j];
                    let gj = e[j];
                    for (k, slot) in row.iter_mut().enumerate() {
                        *slot -= fj * e[k] + gj * u[k];
                    }
                };
                if l + 1 >= PAR_THRESHOLD {
                    let (head, _) = a.split_at_mut((l + 1) * n);
                    head.par_chunks_mut(n)
                        .enumerate()
                        .for_each(|(j, row)| update_row(j, &mut row[..=j]));
                } else {
                    for j in 0..=l {
                        let row = &mut a[j * n..j * n + j + 1];
                        update_row(j, row);
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;

    // Accumulate the transforms into the identity, row-streamed.
    let mut g = vec![0.0; n];
    for i in 0..n {
        if d[i] != 0.0 {
            u[..i].copy_from_slice(&a[i * n..i * n + i]);
            g[..i].iter_mut().for_each(|x| *x = 0.0);
            for k in 0..i {
                let uk = u[k];
                if uk == 0.0 {
                    continue;
                }
                let row = &a[k * n..k * n + i];
                for (j, &akj) in row.iter().enumerate() {
                    g[j] += uk * akj;
                }
            }
            let apply_row = |k: usize, row: &mut [f64], g: &[f64], vk: f64| {
                let _ = k;
                for (slot, &gj) in row.iter_mut().zip(g) {
                    *slot -= gj * vk;
                }
            };
            if i >= PAR_THRESHOLD {
                let (head, _) = a.split_at_mut(i * n);
                let g_ref = &g;
                head.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
                    let vk = row[i];
                    apply_row(k, &mut row[..i], &g_ref[..i], vk);
                });
            } else {
                for k in 0..i {
                    let vk = a[k * n + i];
                    let row = &mut a[k * n..k * n + i];
                    apply_row(k, row, &g[..i], vk);
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

/// Apply the plane rotation (c, s) to rows `i` and `i+1` of the transposed
/// eigenvector store. Kept sequential: the payload per rotation is only
/// 2n flops, far below any worthwhile fork-join.
#[inline]
fn rotate_rows(zt: &mut [f64], n: usize, i: usize, c: f64, s: f64) {
    let (lo, hi) = zt.split_at_mut((i + 1) * n);
    let row_i = &mut lo[i * n..];
    let row_i1 = &mut hi[..n];
    for (x, y) in row_i.iter_mut().zip(row_i1.iter_mut()) {
        let f = *y;
        *y = s * *x + c * f;
        *x = c * *x - s * f;
    }
}

/// Implicit-shift QL iteration on a tridiagonal matrix with eigenvector
/// accumulation in transposed storage `zt` (row j = vector j).
fn ql_implicit(d: &mut [f64], e: &mut [f64], zt: &mut [f64], n: usize) -> Result<()> {
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::NumericalFailure {
                    context: "QL eigenvalue iteration".into(),
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                rotate_rows(zt, n, i, c, s);
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
