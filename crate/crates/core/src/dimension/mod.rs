//! Dimensionality estimators.
//!
//! Two estimators are provided:
//!
//! * participation ratio, `(sum lambda)^2 / sum lambda^2` over covariance
//!   eigenvalues — the effective number of significant variance directions;
//! * two-nearest-neighbor intrinsic dimension, from the Pareto law of the
//!   ratio `mu = r2/r1` of second- to first-neighbor distances, fitted by a
//!   regression through the origin.
//!
//! Both come with sample-size scaling curves over nested, seeded prefix
//! subsamples. Finite-sample 2NN estimates carry a systematic negative bias,
//! so they are always flagged as lower bounds.

pub mod neighbors;

use crate::error::{Error, Result};
use crate::numerics::{covariance, fit_slope_loglog, sym_eig, SeededRng};
use crate::sample_set::SampleSet;

/// Stream id reserved for subsample shuffling, so scaling curves and plateau
/// checks see the same order.
const SCALING_STREAM: u64 = 0x5ca11;

/// Relative change under which the PR scaling curve counts as plateaued.
const PR_PLATEAU_REL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    ParticipationRatio,
    TwoNn,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::ParticipationRatio => "pr",
            Estimator::TwoNn => "2nn",
        }
    }
}

/// How to treat duplicate points (first-neighbor distance zero) in the 2NN
/// estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    /// Drop offending points and count them (default: converged manifold
    /// samples may collide exactly).
    #[default]
    DropAndCount,
    /// Fail with an invalid-input error.
    Raise,
}

/// Result of a dimensionality estimate.
#[derive(Debug, Clone)]
pub struct DimensionReport {
    pub estimator: Estimator,
    pub estimate: f64,
    pub n_samples: usize,
    pub is_lower_bound: bool,
    /// (N, estimate) pairs over nested subsamples, strictly increasing N.
    pub scaling: Vec<(usize, f64)>,
    pub dropped_duplicates: usize,
    pub notes: String,
}

impl DimensionReport {
    /// CSV row: estimator, class label, N, estimate, lower-bound flag.
    pub fn csv_row(&self, class_label: &str) -> String {
        format!(
            "{},{},{},{:.6},{}",
            self.estimator.name(),
            class_label,
            self.n_samples,
            self.estimate,
            self.is_lower_bound
        )
    }
}

/// Participation ratio `(sum lambda)^2 / sum lambda^2` of a nonnegative
/// spectrum. Values below `1e-12 * max` are clamped to zero; genuinely
/// negative entries are rejected.
pub fn participation_ratio(eigenvalues: &[f64]) -> Result<f64> {
    if eigenvalues.is_empty() {
        return Err(Error::invalid("participation_ratio: empty spectrum"));
    }
    let max = eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    if max <= 0.0 {
        return Err(Error::degenerate("participation_ratio: all-zero spectrum"));
    }
    let floor = -1e-12 * max;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &lambda in eigenvalues {
        if lambda < floor {
            return Err(Error::invalid(format!(
                "participation_ratio: negative eigenvalue {lambda:.3e}"
            )));
        }
        let l = lambda.max(0.0);
        sum += l;
        sum_sq += l * l;
    }
    Ok(sum * sum / sum_sq)
}

fn pr_estimate(samples: &SampleSet) -> Result<f64> {
    let cov = covariance(samples)?;
    let eig = sym_eig(&cov)?;
    let clamped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    participation_ratio(&clamped)
}

/// Participation-ratio report for a sample set.
///
/// The lower-bound flag is set when the estimate has not plateaued over the
/// last doubling of N: the PR on the first half of a seeded shuffle is
/// compared against the full-set value.
pub fn pr_of_samples(samples: &SampleSet) -> Result<DimensionReport> {
    let n = samples.n_samples();
    let estimate = pr_estimate(samples)?;

    let (is_lower_bound, scaling) = if n >= 4 {
        let perm = subsample_order(samples);
        let half = n / 2;
        let half_est = pr_estimate(&samples.subset(&perm[..half]))?;
        let rel = (estimate - half_est).abs() / estimate;
        (rel >= PR_PLATEAU_REL, vec![(half, half_est), (n, estimate)])
    } else {
        (true, vec![(n, estimate)])
    };

    Ok(DimensionReport {
        estimator: Estimator::ParticipationRatio,
        estimate,
        n_samples: n,
        is_lower_bound,
        scaling,
        dropped_duplicates: 0,
        notes: String::new(),
    })
}

/// Two-nearest-neighbor intrinsic dimension with the default duplicate
/// policy (drop and count).
pub fn two_nn(samples: &SampleSet) -> Result<DimensionReport> {
    two_nn_with_policy(samples, DuplicatePolicy::DropAndCount)
}

/// Two-nearest-neighbor intrinsic dimension.
///
/// Per point, `mu = r2/r1`; the sorted ratios against the empirical CDF
/// `i/N` give the dimension through the origin-constrained log-log
/// regression over `i = 1..N-1`. No outlier trimming is applied. The result
/// is always flagged as a lower bound.
pub fn two_nn_with_policy(
    samples: &SampleSet,
    policy: DuplicatePolicy,
) -> Result<DimensionReport> {
    let n = samples.n_samples();
    if n < 3 {
        return Err(Error::invalid(format!(
            "two_nn needs at least 3 samples, got {n}"
        )));
    }
    let pairs = neighbors::two_nearest_distances(samples.as_flat(), samples.dim());

    let mut mus: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut dropped = 0usize;
    for (idx, &(r1, r2)) in pairs.iter().enumerate() {
        if r1 == 0.0 {
            match policy {
                DuplicatePolicy::DropAndCount => {
                    dropped += 1;
                    continue;
                }
                DuplicatePolicy::Raise => {
                    return Err(Error::invalid(format!(
                        "two_nn: duplicate point at index {idx}"
                    )));
                }
            }
        }
        mus.push((r2 / r1, idx));
    }
    let m = mus.len();
    if m < 3 {
        return Err(Error::degenerate(format!(
            "two_nn: only {m} usable points after dropping {dropped} duplicates"
        )));
    }
    // Ties broken by sample index for bit-reproducible runs.
    mus.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    // mu_(i) vs 1/(1 - i/M) for i = 1..M-1; the through-origin log-log slope
    // is exactly -sum(log mu log(1 - i/M)) / sum (log mu)^2.
    let xs: Vec<f64> = mus[..m - 1].iter().map(|p| p.0).collect();
    let ys: Vec<f64> = (1..m).map(|i| 1.0 / (1.0 - i as f64 / m as f64)).collect();
    let fit = fit_slope_loglog(&xs, &ys, true)?;

    Ok(DimensionReport {
        estimator: Estimator::TwoNn,
        estimate: fit.slope,
        n_samples: m,
        is_lower_bound: true,
        scaling: Vec::new(),
        dropped_duplicates: dropped,
        notes: "no outlier trimming applied".to_string(),
    })
}

/// Deterministic subsample order for a set: a seeded shuffle on a stream
/// reserved for scaling analyses.
fn subsample_order(samples: &SampleSet) -> Vec<usize> {
    let mut rng = SeededRng::with_stream(samples.meta.seed, SCALING_STREAM);
    rng.permutation(samples.n_samples())
}

/// Estimator evaluated on nested prefix subsamples of a fixed seeded
/// shuffle. Grid values must be strictly increasing and not exceed N.
pub fn scaling_curve(
    samples: &SampleSet,
    estimator: Estimator,
    n_grid: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let n = samples.n_samples();
    if n_grid.is_empty() {
        return Err(Error::invalid("scaling_curve: empty grid"));
    }
    for w in n_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("scaling_curve: grid must be strictly increasing"));
        }
    }
    if *n_grid.last().unwrap() > n {
        return Err(Error::invalid(format!(
            "scaling_curve: grid value {} exceeds sample count {n}",
            n_grid.last().unwrap()
        )));
    }
    let perm = subsample_order(samples);
    let mut curve = Vec::with_capacity(n_grid.len());
    for &size in n_grid {
        let subset = samples.subset(&perm[..size]);
        let est = match estimator {
            Estimator::ParticipationRatio => pr_estimate(&subset)?,
            Estimator::TwoNn => two_nn(&subset)?.estimate,
        };
        curve.push((size, est));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{random_orthonormal, SeededRng};
    use crate::sample_set::SampleMeta;

    fn set(rows: Vec<Vec<f64>>, seed: u64) -> SampleSet {
        SampleSet::from_rows(rows, SampleMeta::new(seed, "test")).unwrap()
    }

    #[test]
    fn pr_single_direction_is_one() {
        let mut spectrum = vec![0.0; 16];
        spectrum[0] = 1.0;
        assert_eq!(participation_ratio(&spectrum).unwrap(), 1.0);
    }

    #[test]
    fn pr_flat_spectrum_is_dimension() {
        let d = 23;
        let spectrum = vec![0.4; d];
        let pr = participation_ratio(&spectrum).unwrap();
        assert!((pr - d as f64).abs() < 1e-12);
    }

    #[test]
    fn pr_two_one_one() {
        let pr = participation_ratio(&[2.0, 1.0, 1.0]).unwrap();
        assert!((pr - 16.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn pr_rejects_zero_spectrum() {
        assert!(matches!(
            participation_ratio(&[0.0, 0.0]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn pr_k_equal_eigenvalues_exact() {
        for k in 1..=8 {
            let mut spectrum = vec![0.0; 12];
            for s in spectrum.iter_mut().take(k) {
                *s = 3.5;
            }
            assert_eq!(participation_ratio(&spectrum).unwrap(), k as f64);
        }
    }

    #[test]
    fn pr_of_line_segment_in_ten_dims() {
        let mut rng = SeededRng::new(8);
        let dir = random_orthonormal(10, 1, &mut rng);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let t = rng.uniform();
                (0..10).map(|i| t * dir.get(i, 0)).collect()
            })
            .collect();
        let report = pr_of_samples(&set(rows, 8)).unwrap();
        assert!((report.estimate - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pr_isotropic_gaussian_full_dimension() {
        let mut rng = SeededRng::new(21);
        let d = 50;
        let n = 20_000;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| rng.normal_vec(d)).collect();
        let report = pr_of_samples(&set(rows, 21)).unwrap();
        assert!(
            (report.estimate - 50.0).abs() < 2.0,
            "PR = {}",
            report.estimate
        );
    }

    #[test]
    fn pr_matches_analytic_spectrum() {
        // Eigenvalues (10, 10, 1 x 48): PR = 68^2 / 248.
        let mut rng = SeededRng::new(33);
        let d = 50;
        let n = 20_000;
        let mut scales = vec![1.0f64; d];
        scales[0] = 10.0f64.sqrt();
        scales[1] = 10.0f64.sqrt();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| scales.iter().map(|s| s * rng.normal()).collect())
            .collect();
        let report = pr_of_samples(&set(rows, 33)).unwrap();
        let analytic = 68.0 * 68.0 / 248.0;
        assert!(
            (report.estimate - analytic).abs() < 0.8,
            "PR = {} vs analytic {analytic}",
            report.estimate
        );
    }

    #[test]
    fn two_nn_three_collinear_points_closed_form() {
        // Points 0, 1, 3: mu values 3, 2, 1.5; sorted (1.5, 2, 3); the
        // regression uses the two smallest ratios with CDF ranks 1/3, 2/3.
        let rows = vec![vec![0.0], vec![1.0], vec![3.0]];
        let report = two_nn(&set(rows, 1)).unwrap();
        let ln15 = 1.5f64.ln();
        let ln2 = 2.0f64.ln();
        let ln3 = 3.0f64.ln();
        let expected = (ln15 * ln15 + ln2 * ln3) / (ln15 * ln15 + ln2 * ln2);
        assert!((report.estimate - expected).abs() < 1e-12);
        assert!(report.is_lower_bound);
    }

    #[test]
    fn two_nn_line_in_high_ambient_dim() {
        let mut rng = SeededRng::new(44);
        let ambient = 100;
        let dir = random_orthonormal(ambient, 1, &mut rng);
        let rows: Vec<Vec<f64>> = (0..4000)
            .map(|_| {
                let t = rng.uniform();
                (0..ambient).map(|i| t * dir.get(i, 0)).collect()
            })
            .collect();
        let report = two_nn(&set(rows, 44)).unwrap();
        assert!(
            report.estimate > 0.9 && report.estimate < 1.1,
            "2NN = {}",
            report.estimate
        );
    }

    #[test]
    fn two_nn_drops_duplicates_by_default() {
        let rows = vec![vec![0.0], vec![0.0], vec![1.0], vec![3.0], vec![7.0]];
        let report = two_nn(&set(rows.clone(), 2)).unwrap();
        assert_eq!(report.dropped_duplicates, 2);
        assert_eq!(report.n_samples, 3);
        assert!(matches!(
            two_nn_with_policy(&set(rows, 2), DuplicatePolicy::Raise),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn scaling_curve_single_point_equals_plain_estimate() {
        let mut rng = SeededRng::new(5);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| rng.normal_vec(4)).collect();
        let s = set(rows, 5);
        let curve = scaling_curve(&s, Estimator::ParticipationRatio, &[200]).unwrap();
        let plain = pr_of_samples(&s).unwrap();
        assert_eq!(curve.len(), 1);
        assert!((curve[0].1 - plain.estimate).abs() < 1e-12);
    }

    #[test]
    fn scaling_curve_validates_grid() {
        let mut rng = SeededRng::new(6);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| rng.normal_vec(3)).collect();
        let s = set(rows, 6);
        assert!(scaling_curve(&s, Estimator::ParticipationRatio, &[10, 10]).is_err());
        assert!(scaling_curve(&s, Estimator::ParticipationRatio, &[10, 100]).is_err());
    }

    #[test]
    fn pr_scaling_plateaus_on_low_dimensional_gaussian() {
        let mut rng = SeededRng::new(61);
        let d = 20;
        let n = 4000;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut v = vec![0.0; d];
                for x in v.iter_mut().take(3) {
                    *x = rng.normal();
                }
                v
            })
            .collect();
        let s = set(rows, 61);
        let curve = scaling_curve(&s, Estimator::ParticipationRatio, &[500, 1000, 2000, 4000])
            .unwrap();
        let last = curve[curve.len() - 1].1;
        let prev = curve[curve.len() - 2].1;
        assert!(
            (last - prev).abs() / last < 0.02,
            "no plateau: {prev} -> {last}"
        );
        let report = pr_of_samples(&s).unwrap();
        assert!(!report.is_lower_bound);
    }

    #[test]
    fn two_nn_estimates_grow_with_n_on_twenty_cube() {
        // Finite-sample bias shrinks as N grows.
        let mut rng = SeededRng::new(62);
        let d = 20;
        let rows: Vec<Vec<f64>> = (0..6000).map(|_| rng.uniform_cube_point(d)).collect();
        let s = set(rows, 62);
        let curve = scaling_curve(&s, Estimator::TwoNn, &[750, 1500, 3000, 6000]).unwrap();
        assert!(
            curve.last().unwrap().1 > curve.first().unwrap().1,
            "curve: {curve:?}"
        );
        for w in curve.windows(2) {
            assert!(w[1].1 > w[0].1 * 0.95, "non-monotone step: {curve:?}");
        }
    }

    #[test]
    fn pr_invariant_under_rotation_and_scale() {
        let mut rng = SeededRng::new(63);
        let d = 8;
        let n = 300;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut v = rng.normal_vec(d);
                v[0] *= 3.0;
                v
            })
            .collect();
        let base = pr_of_samples(&set(rows.clone(), 63)).unwrap().estimate;

        let q = random_orthonormal(d, d, &mut rng);
        let rotated: Vec<Vec<f64>> = rows.iter().map(|r| q.matvec(r)).collect();
        let rot = pr_of_samples(&set(rotated, 63)).unwrap().estimate;
        assert!((base - rot).abs() / base < 1e-8);

        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|v| 7.5 * v).collect())
            .collect();
        let sc = pr_of_samples(&set(scaled, 63)).unwrap().estimate;
        assert!((base - sc).abs() / base < 1e-8);
    }
}
