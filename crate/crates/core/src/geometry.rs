//! Ellipsoid distance toy model.
//!
//! A d-dimensional ellipsoid embedded in a D-dimensional ambient space:
//! `E = { V y + c : sum_i (y_i / r_i)^2 <= 1 }` with orthonormal basis `V`,
//! center `c` and principal radii `r_i`. The distance from a point to the
//! boundary shell splits orthogonally,
//!
//! ```text
//! dist^2 = d_perp^2 + d_par^2,
//! ```
//!
//! where the perpendicular part is the residual off the spanned subspace
//! and the parallel part is an exact nearest-point problem in the d-dim
//! frame, solved through the Lagrange stationarity condition
//! `sum_i (y0_i r_i / (r_i^2 + lambda))^2 = 1` with a bracketed, safeguarded
//! Newton iteration. Interior points sit on the negative branch
//! `lambda in (-min r_i^2, 0)`; when the branch holds no root, the nearest
//! boundary point has free components on the smallest axes and the closed
//! form for that degenerate case applies.
//!
//! The closed-form expectation for a uniform query point against the filled
//! ellipsoid is `(D - d)/6 + max(0, sqrt(d/6) - R_eff)^2`, with `R_eff` the
//! root mean square of the radii. Both the boundary and the filled-set
//! Monte Carlo estimates are reported: they differ for interior parallel
//! projections, which only arise once `d` is large.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::numerics::orthonormal::random_orthonormal;
use crate::numerics::rng::SeededRng;
use crate::numerics::{kahan_sum, mean_and_sem};
use rayon::prelude::*;

/// Constraint-residual tolerance of the nearest-point solver.
const ROOT_TOL: f64 = 1e-10;
const MAX_ROOT_ITERS: usize = 200;

/// Ellipsoid embedded in the ambient hypercube.
#[derive(Debug, Clone)]
pub struct EllipsoidSpec {
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    /// Center, a point of `[0,1]^D`.
    pub center: Vec<f64>,
    /// `D x d` orthonormal columns spanning the ellipsoid subspace.
    pub basis: Matrix,
    /// Principal radii, all positive.
    pub radii: Vec<f64>,
    pub seed: u64,
}

impl EllipsoidSpec {
    pub fn validate(&self) -> Result<()> {
        if self.intrinsic_dim == 0 || self.intrinsic_dim > self.ambient_dim {
            return Err(Error::invalid("ellipsoid needs 1 <= d <= D"));
        }
        if self.radii.len() != self.intrinsic_dim || self.radii.iter().any(|&r| r.is_nan() || r <= 0.0) {
            return Err(Error::invalid("ellipsoid radii must be d positive reals"));
        }
        if self.basis.rows() != self.ambient_dim || self.basis.cols() != self.intrinsic_dim {
            return Err(Error::invalid("ellipsoid basis has wrong shape"));
        }
        if self.basis.orthonormality_defect() > 1e-8 {
            return Err(Error::invalid("ellipsoid basis is not orthonormal"));
        }
        Ok(())
    }
}

/// Monte Carlo distance estimate: mean of squared distances with the
/// 1-sigma error of the mean.
#[derive(Debug, Clone, Copy)]
pub struct DistanceEstimate {
    pub mean_sq_dist: f64,
    /// Standard error of the mean.
    pub std: f64,
    pub n_points: usize,
}

/// Random ellipsoid: Haar basis, radii i.i.d. uniform in the given range,
/// center uniform in the hypercube.
pub fn make_ellipsoid(
    ambient_dim: usize,
    intrinsic_dim: usize,
    radius_low: f64,
    radius_high: f64,
    seed: u64,
) -> Result<EllipsoidSpec> {
    if intrinsic_dim == 0 || intrinsic_dim > ambient_dim {
        return Err(Error::invalid(format!(
            "ellipsoid dimension {intrinsic_dim} must lie in [1, {ambient_dim}]"
        )));
    }
    if radius_low.is_nan() || radius_low <= 0.0 || radius_high < radius_low {
        return Err(Error::invalid("radius range must satisfy 0 < low <= high"));
    }
    let mut rng = SeededRng::with_stream(seed, 0);
    let basis = random_orthonormal(ambient_dim, intrinsic_dim, &mut rng);
    let radii: Vec<f64> = (0..intrinsic_dim)
        .map(|_| rng.uniform_in(radius_low, radius_high))
        .collect();
    let center = rng.uniform_cube_point(ambient_dim);
    Ok(EllipsoidSpec {
        ambient_dim,
        intrinsic_dim,
        center,
        basis,
        radii,
        seed,
    })
}

/// Root mean square of the principal radii.
pub fn effective_radius(radii: &[f64]) -> Result<f64> {
    if radii.is_empty() {
        return Err(Error::invalid("effective_radius needs a nonempty radius list"));
    }
    if radii.iter().any(|&r| r.is_nan() || r <= 0.0) {
        return Err(Error::invalid("radii must be positive"));
    }
    Ok((radii.iter().map(|r| r * r).sum::<f64>() / radii.len() as f64).sqrt())
}

/// Closed-form expected squared distance from a uniform hypercube point to
/// the filled ellipsoid: `(D - d)/6 + max(0, sqrt(d/6) - R_eff)^2`.
pub fn analytic_expected_sqdist(ambient_dim: usize, radii: &[f64]) -> Result<f64> {
    let d = radii.len();
    if d == 0 || d > ambient_dim {
        return Err(Error::invalid("analytic_expected_sqdist needs 1 <= d <= D"));
    }
    let r_eff = effective_radius(radii)?;
    let perp = (ambient_dim - d) as f64 / 6.0;
    let par = ((d as f64 / 6.0).sqrt() - r_eff).max(0.0);
    Ok(perp + par * par)
}

/// Squared distance from frame coordinates `y0` to the ellipsoid surface
/// `sum (y_i/r_i)^2 = 1`, plus whether `y0` lies inside the filled set.
fn parallel_surface_sq_dist(y0: &[f64], radii: &[f64]) -> Result<(f64, bool)> {
    let weighted: f64 = y0
        .iter()
        .zip(radii)
        .map(|(y, r)| (y / r) * (y / r))
        .sum();
    let interior = weighted <= 1.0;
    if weighted == 1.0 {
        return Ok((0.0, true));
    }

    let r_min = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let r_min_sq = r_min * r_min;

    // g(lambda) = sum (y0_i r_i / (r_i^2 + lambda))^2, strictly decreasing
    // on (-r_min^2, inf).
    let g_and_dg = |lambda: f64| -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        for (y, r) in y0.iter().zip(radii) {
            let denom = r * r + lambda;
            let term = y * r / denom;
            g += term * term;
            dg -= 2.0 * term * term / denom;
        }
        (g, dg)
    };

    let (mut lo, mut hi);
    if !interior {
        // Exterior: root in (0, |y0 . r|): g(0) > 1 and g at the upper end
        // is below 1 because (r^2 + lambda)^2 > lambda^2.
        lo = 0.0;
        hi = y0
            .iter()
            .zip(radii)
            .map(|(y, r)| (y * r) * (y * r))
            .sum::<f64>()
            .sqrt();
        if hi == 0.0 {
            // y0 = 0 cannot be exterior.
            return Err(Error::NumericalFailure {
                context: "ellipsoid projection bracket".into(),
                residual: weighted,
            });
        }
    } else {
        // Interior: the root, when it exists, lies in (-r_min^2, 0). The
        // branch supremum is finite when y0 has no weight on the smallest
        // axes; below 1 it means the nearest boundary point keeps free
        // components there and has a closed form.
        let mass_on_min: f64 = y0
            .iter()
            .zip(radii)
            .filter(|(_, &r)| r == r_min)
            .map(|(y, _)| y * y)
            .sum();
        if mass_on_min == 0.0 {
            let sup: f64 = y0
                .iter()
                .zip(radii)
                .filter(|(_, &r)| r != r_min)
                .map(|(y, r)| {
                    let t = y * r / (r * r - r_min_sq);
                    t * t
                })
                .sum();
            if sup <= 1.0 {
                return Ok((degenerate_interior_sq_dist(y0, radii, r_min), true));
            }
        }
        // Walk toward the pole until the bracket captures the root.
        let mut delta = 0.5 * r_min_sq;
        loop {
            let cand = -r_min_sq + delta;
            if g_and_dg(cand).0 > 1.0 {
                lo = cand;
                break;
            }
            delta *= 0.5;
            if delta < r_min_sq * 1e-15 {
                // Root indistinguishable from the pole at f64 resolution.
                return Ok((degenerate_interior_sq_dist(y0, radii, r_min), true));
            }
        }
        hi = 0.0;
    }

    // Safeguarded Newton on g(lambda) - 1 inside [lo, hi].
    let mut lambda = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ROOT_ITERS {
        let (g, dg) = g_and_dg(lambda);
        residual = g - 1.0;
        if residual.abs() <= ROOT_TOL {
            return Ok((sq_dist_at_lambda(y0, radii, lambda), interior));
        }
        if residual > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let newton = lambda - residual / dg;
        lambda = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NumericalFailure {
        context: "ellipsoid nearest-point Newton iteration".into(),
        residual: residual.abs(),
    })
}

/// Distance for the degenerate interior case: the multiplier sits at the
/// pole `-r_min^2`, coordinates off the smallest axes are pinned by the
/// stationarity condition and the leftover constraint weight goes to the
/// smallest axes.
fn degenerate_interior_sq_dist(y0: &[f64], radii: &[f64], r_min: f64) -> f64 {
    let r_min_sq = r_min * r_min;
    let mut moved_sq = 0.0;
    let mut used_weight = 0.0;
    for (y, r) in y0.iter().zip(radii) {
        if *r == r_min {
            continue;
        }
        let target = y * r * r / (r * r - r_min_sq);
        moved_sq += (y - target) * (y - target);
        used_weight += (target / r) * (target / r);
    }
    let leftover = (1.0 - used_weight).max(0.0);
    moved_sq + r_min_sq * leftover
}

fn sq_dist_at_lambda(y0: &[f64], radii: &[f64], lambda: f64) -> f64 {
    y0.iter()
        .zip(radii)
        .map(|(y, r)| {
            let shrink = lambda / (r * r + lambda);
            (y * shrink) * (y * shrink)
        })
        .sum()
}

/// Exact distances from an ambient point to the ellipsoid: to the boundary
/// shell and to the filled set (zero parallel part for interior points).
pub fn boundary_and_filled_distance(point: &[f64], e: &EllipsoidSpec) -> Result<(f64, f64)> {
    if point.len() != e.ambient_dim {
        return Err(Error::invalid("point dimension does not match ellipsoid"));
    }
    if point.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("point must be finite"));
    }
    let z: Vec<f64> = point.iter().zip(&e.center).map(|(p, c)| p - c).collect();
    let y0 = e.basis.t_matvec(&z);
    // Explicit residual z - V y0: immune to the cancellation that a
    // norm-difference formulation hits for points near the subspace.
    let back = e.basis.matvec(&y0);
    let d_perp_sq: f64 = z
        .iter()
        .zip(&back)
        .map(|(zi, bi)| {
            let r = zi - bi;
            r * r
        })
        .sum();

    let (d_par_sq, interior) = parallel_surface_sq_dist(&y0, &e.radii)?;
    let boundary = (d_perp_sq + d_par_sq).sqrt();
    let filled = if interior {
        d_perp_sq.sqrt()
    } else {
        boundary
    };
    Ok((boundary, filled))
}

/// Exact Euclidean distance to the boundary shell.
pub fn boundary_distance(point: &[f64], e: &EllipsoidSpec) -> Result<f64> {
    boundary_and_filled_distance(point, e).map(|(b, _)| b)
}

/// Paired Monte Carlo estimates against one seeded ellipsoid.
#[derive(Debug, Clone)]
pub struct McSqDist {
    pub intrinsic_dim: usize,
    pub boundary: DistanceEstimate,
    pub filled: DistanceEstimate,
    pub seed: u64,
}

/// Draw one ellipsoid and `n_points` uniform hypercube points; average the
/// squared distances to the boundary shell and to the filled set.
///
/// Points are evaluated on independent derived streams and reduced in index
/// order, so the result does not depend on the worker count.
pub fn monte_carlo_expected_sqdist(
    ambient_dim: usize,
    intrinsic_dim: usize,
    radius_range: (f64, f64),
    n_points: usize,
    seed: u64,
) -> Result<McSqDist> {
    if n_points < 2 {
        return Err(Error::invalid("monte carlo needs n_points >= 2"));
    }
    let e = make_ellipsoid(
        ambient_dim,
        intrinsic_dim,
        radius_range.0,
        radius_range.1,
        seed,
    )?;

    let sq: Result<Vec<(f64, f64)>> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededRng::with_stream(seed, i as u64 + 1);
            let p = rng.uniform_cube_point(ambient_dim);
            let (b, f) = boundary_and_filled_distance(&p, &e)?;
            Ok((b * b, f * f))
        })
        .collect();
    let sq = sq?;
    let boundary_sq: Vec<f64> = sq.iter().map(|p| p.0).collect();
    let filled_sq: Vec<f64> = sq.iter().map(|p| p.1).collect();
    let (b_mean, b_sem) = mean_and_sem(&boundary_sq);
    let (f_mean, f_sem) = mean_and_sem(&filled_sq);
    Ok(McSqDist {
        intrinsic_dim,
        boundary: DistanceEstimate {
            mean_sq_dist: b_mean,
            std: b_sem,
            n_points,
        },
        filled: DistanceEstimate {
            mean_sq_dist: f_mean,
            std: f_sem,
            n_points,
        },
        seed,
    })
}

/// Squared norm of `point - center` restricted to the subspace complement;
/// exposed for diagnostics.
pub fn perpendicular_sq(point: &[f64], e: &EllipsoidSpec) -> f64 {
    let z: Vec<f64> = point.iter().zip(&e.center).map(|(p, c)| p - c).collect();
    let y0 = e.basis.t_matvec(&z);
    let back = e.basis.matvec(&y0);
    kahan_sum(z.iter().zip(&back).map(|(zi, bi)| {
        let r = zi - bi;
        r * r
    }))
}
