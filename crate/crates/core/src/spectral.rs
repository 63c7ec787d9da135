//! Spectral misalignment diagnostics: covariance spectrum densities,
//! principal-angle subspace alignment with a random baseline, and radially
//! averaged power spectral density with a power-law slope fit.

use crate::error::{Error, Result};
use crate::numerics::fft::fft2;
use crate::numerics::matrix::Matrix;
use crate::numerics::orthonormal::random_orthonormal;
use crate::numerics::rng::SeededRng;
use crate::numerics::{fit_slope_loglog, mean_and_sem, sym_eig};
use rayon::prelude::*;

/// Eigenvalues below `EIGENVALUE_FLOOR_REL * max` are excluded from density
/// histograms (and counted).
const EIGENVALUE_FLOOR_REL: f64 = 1e-12;

/// Normalized histogram of a spectrum over log-spaced bins. The density is
/// per unit log-eigenvalue, so it integrates to one over the bin edges.
#[derive(Debug, Clone)]
pub struct SpectrumDensity {
    /// Bin edges in ln(eigenvalue), length `n_bins + 1`.
    pub log_edges: Vec<f64>,
    /// Density per bin (with respect to the log measure).
    pub density: Vec<f64>,
    /// Eigenvalues retained after flooring.
    pub n_eigenvalues: usize,
    /// Eigenvalues dropped below the floor.
    pub n_excluded: usize,
}

impl SpectrumDensity {
    /// Integral of the density over the bins; one up to roundoff.
    pub fn total_mass(&self) -> f64 {
        self.density
            .iter()
            .zip(self.log_edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }

    /// Width of the occupied support in decades.
    pub fn support_decades(&self) -> f64 {
        let occupied: Vec<usize> = self
            .density
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0.0)
            .map(|(i, _)| i)
            .collect();
        match (occupied.first(), occupied.last()) {
            (Some(&lo), Some(&hi)) => {
                (self.log_edges[hi + 1] - self.log_edges[lo]) / std::f64::consts::LN_10
            }
            _ => 0.0,
        }
    }
}

/// Histogram of nonnegative eigenvalues over log-spaced bins.
pub fn spectrum_density(eigenvalues: &[f64], n_bins: usize) -> Result<SpectrumDensity> {
    if eigenvalues.is_empty() || n_bins == 0 {
        return Err(Error::invalid("spectrum_density needs eigenvalues and bins"));
    }
    let max = eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Err(Error::degenerate("spectrum_density: no positive eigenvalues"));
    }
    let floor = EIGENVALUE_FLOOR_REL * max;
    let retained: Vec<f64> = eigenvalues.iter().cloned().filter(|&l| l >= floor).collect();
    let n_excluded = eigenvalues.len() - retained.len();

    let min = retained.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (min.ln(), max.ln());
    if hi - lo < 1e-12 {
        // Single-valued spectrum: one occupied bin of token width.
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / n_bins as f64;
    let log_edges: Vec<f64> = (0..=n_bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; n_bins];
    for &l in &retained {
        let mut idx = ((l.ln() - lo) / width) as usize;
        if idx >= n_bins {
            idx = n_bins - 1;
        }
        counts[idx] += 1;
    }
    let total = retained.len() as f64;
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    Ok(SpectrumDensity {
        log_edges,
        density,
        n_eigenvalues: retained.len(),
        n_excluded,
    })
}

/// Smallest `k` whose leading eigenvalues explain the requested variance
/// fraction. Expects a descending spectrum.
pub fn pick_k_for_variance(eigenvalues: &[f64], fraction: f64) -> Result<usize> {
    if fraction.is_nan() || fraction <= 0.0 || fraction > 1.0 {
        return Err(Error::invalid("variance fraction must lie in (0, 1]"));
    }
    if eigenvalues.is_empty() {
        return Err(Error::invalid("pick_k_for_variance: empty spectrum"));
    }
    let total: f64 = eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::degenerate("pick_k_for_variance: zero spectrum"));
    }
    let mut acc = 0.0;
    for (i, &l) in eigenvalues.iter().enumerate() {
        acc += l.max(0.0);
        if acc / total >= fraction {
            return Ok(i + 1);
        }
    }
    Ok(eigenvalues.len())
}

/// Alignment between two subspaces spanned by orthonormal columns: the mean
/// cosine of the principal angles.
///
/// The cosines are the singular values of `U^T V`; min(k, m) of them exist
/// and the sum is normalized by k (the first argument's dimension), padding
/// any missing cosines with zeros.
pub fn subspace_alignment(u: &Matrix, v: &Matrix) -> Result<f64> {
    if u.rows() != v.rows() {
        return Err(Error::invalid("subspaces live in different ambient dimensions"));
    }
    if u.cols() == 0 || v.cols() == 0 {
        return Err(Error::invalid("subspaces must have at least one column"));
    }
    if u.orthonormality_defect() > 1e-8 || v.orthonormality_defect() > 1e-8 {
        return Err(Error::invalid("subspace bases must be column-orthonormal"));
    }
    let cosines = principal_cosines(u, v)?;
    Ok(cosines.iter().sum::<f64>() / u.cols() as f64)
}

/// Singular values of `U^T V`, clamped into `[0, 1]`, descending.
///
/// Computed from the symmetric eigenvalues of the small Gram matrix
/// `(U^T V)(U^T V)^T`.
pub fn principal_cosines(u: &Matrix, v: &Matrix) -> Result<Vec<f64>> {
    let m = u.t_matmul(v); // k x m
    let gram = m.matmul(&m.transpose()); // k x k symmetric PSD
    let eig = sym_eig(&gram)?;
    let count = u.cols().min(v.cols());
    Ok(eig
        .eigenvalues
        .iter()
        .take(count)
        .map(|&l| l.max(0.0).sqrt().min(1.0))
        .collect())
}

/// Alignment score against its chance level.
#[derive(Debug, Clone, Copy)]
pub struct AlignmentScore {
    pub k: usize,
    pub m: usize,
    pub score: f64,
    pub baseline: f64,
}

impl AlignmentScore {
    pub fn csv_row(&self) -> String {
        format!("{},{},{:.6},{:.6}", self.k, self.m, self.score, self.baseline)
    }
}

/// Monte Carlo chance level for the alignment score: mean over independent
/// Haar-random subspace pairs.
#[derive(Debug, Clone, Copy)]
pub struct BaselineScore {
    pub mean: f64,
    /// Standard error of the mean.
    pub sem: f64,
    /// Standard deviation across trials.
    pub std: f64,
    pub trials: usize,
}

pub fn random_alignment_baseline(
    ambient_dim: usize,
    k: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<BaselineScore> {
    if k == 0 || m == 0 || k > ambient_dim || m > ambient_dim {
        return Err(Error::invalid("baseline needs 1 <= k, m <= D"));
    }
    if trials == 0 {
        return Err(Error::invalid("baseline needs at least one trial"));
    }
    let scores: Result<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeededRng::with_stream(seed, t as u64 + 1);
            let u = random_orthonormal(ambient_dim, k, &mut rng);
            let v = random_orthonormal(ambient_dim, m, &mut rng);
            subspace_alignment(&u, &v)
        })
        .collect();
    let scores = scores?;
    let (mean, sem) = mean_and_sem(&scores);
    let std = sem * (trials as f64).sqrt();
    Ok(BaselineScore {
        mean,
        sem,
        std,
        trials,
    })
}

/// Radially averaged power spectral density with a fitted power-law slope.
#[derive(Debug, Clone)]
pub struct RadialPsd {
    /// Integer radial frequencies, ascending from 1.
    pub freqs: Vec<f64>,
    /// Mean power per ring, averaged over cells and images.
    pub power: Vec<f64>,
    /// Log-log slope over the fit band; for `P(k) ~ 1/k^alpha` this is
    /// `-alpha`.
    pub slope: f64,
    /// Inclusive fit band in ring units.
    pub fit_band: (usize, usize),
    /// Set when the default band (2 to Nyquist/2) had too few rings and the
    /// full usable band was taken instead.
    pub band_widened: bool,
    pub n_images: usize,
}

impl RadialPsd {
    pub fn alpha(&self) -> f64 {
        -self.slope
    }
}

/// Compute the radially averaged PSD of a set of equally sized square
/// grids. Per image the mean is removed, the 2-D spectrum taken, and the
/// squared magnitudes accumulated into integer-frequency rings; ring powers
/// are averaged over images and the slope fitted on the documented band.
pub fn radial_psd(images: &[Matrix]) -> Result<RadialPsd> {
    let first = images
        .first()
        .ok_or_else(|| Error::invalid("radial_psd needs at least one image"))?;
    if first.rows() != first.cols() {
        return Err(Error::invalid("radial_psd requires square grids"));
    }
    let side = first.rows();
    for img in images {
        if img.rows() != side || img.cols() != side {
            return Err(Error::invalid("radial_psd requires equally sized square grids"));
        }
    }

    let max_ring = side / 2;
    let ring_of = |u: usize, v: usize| -> usize {
        let fu = u.min(side - u) as f64;
        let fv = v.min(side - v) as f64;
        (fu * fu + fv * fv).sqrt().round() as usize
    };

    let accumulated: Result<Vec<(Vec<f64>, Vec<usize>)>> = images
        .par_iter()
        .map(|img| {
            let mean = img.as_slice().iter().sum::<f64>() / (side * side) as f64;
            let centered = Matrix::from_vec(
                side,
                side,
                img.as_slice().iter().map(|&v| v - mean).collect(),
            )?;
            let spectrum = fft2(&centered)?;
            let mut power = vec![0.0; max_ring + 1];
            let mut counts = vec![0usize; max_ring + 1];
            for u in 0..side {
                for v in 0..side {
                    let ring = ring_of(u, v);
                    if ring == 0 || ring > max_ring {
                        continue;
                    }
                    power[ring] += spectrum.get(u, v).norm_sq();
                    counts[ring] += 1;
                }
            }
            Ok((power, counts))
        })
        .collect();
    let accumulated = accumulated?;

    let mut power = vec![0.0; max_ring + 1];
    let mut counts = vec![0usize; max_ring + 1];
    for (p, c) in &accumulated {
        for r in 0..=max_ring {
            power[r] += p[r];
            counts[r] += c[r];
        }
    }
    let freqs: Vec<f64> = (1..=max_ring).map(|r| r as f64).collect();
    let mean_power: Vec<f64> = (1..=max_ring)
        .map(|r| {
            if counts[r] == 0 {
                0.0
            } else {
                power[r] / counts[r] as f64
            }
        })
        .collect();

    if mean_power.iter().all(|&p| p <= 0.0) {
        return Err(Error::degenerate(
            "radial_psd: no AC power (constant images)",
        ));
    }

    // Default band: rings 2 to Nyquist/2, skipping DC neighborhood and the
    // aliasing-contaminated top octave; tiny grids fall back to all rings.
    let (band, widened) = {
        let hi = max_ring / 2;
        if hi >= 4 {
            ((2usize, hi), false)
        } else {
            ((1usize, max_ring), true)
        }
    };
    let xs: Vec<f64> = (band.0..=band.1).map(|r| r as f64).collect();
    let ys: Vec<f64> = (band.0..=band.1)
        .map(|r| mean_power[r - 1])
        .collect();
    if ys.iter().any(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::degenerate(
            "radial_psd: zero-power ring inside the fit band",
        ));
    }
    let fit = fit_slope_loglog(&xs, &ys, false)?;

    Ok(RadialPsd {
        freqs,
        power: mean_power,
        slope: fit.slope,
        fit_band: band,
        band_widened: widened,
        n_images: images.len(),
    })
}

/// Synthesize a random field with power spectrum `P(k) ~ 1/k^alpha` by
/// spectrally shaping white noise. Used as the construction oracle for the
/// PSD estimator and as a pipeline control.
pub fn power_law_field(side: usize, alpha: f64, rng: &mut SeededRng) -> Result<Matrix> {
    let noise = Matrix::from_vec(
        side,
        side,
        (0..side * side).map(|_| rng.normal()).collect(),
    )?;
    let mut spectrum = fft2(&noise)?;
    let max_ring = side / 2;
    let data: Vec<crate::numerics::Complex> = (0..side * side)
        .map(|idx| {
            let (u, v) = (idx / side, idx % side);
            let fu = u.min(side - u) as f64;
            let fv = v.min(side - v) as f64;
            let k = (fu * fu + fv * fv).sqrt();
            let c = spectrum.as_slice()[idx];
            if k == 0.0 || k > max_ring as f64 {
                crate::numerics::Complex::ZERO
            } else {
                let scale = k.powf(-alpha / 2.0);
                crate::numerics::Complex::new(c.re * scale, c.im * scale)
            }
        })
        .collect();
    spectrum = crate::numerics::fft::ComplexGrid::from_parts(side, data);
    crate::numerics::ifft2(&spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_single_value_single_bin() {
        let sd = spectrum_density(&[2.0, 2.0, 2.0], 5).unwrap();
        assert!((sd.total_mass() - 1.0).abs() < 1e-6);
        let occupied = sd.density.iter().filter(|&&d| d > 0.0).count();
        assert_eq!(occupied, 1);
        assert_eq!(sd.n_eigenvalues, 3);
    }

    #[test]
    fn density_integrates_to_one() {
        let mut rng = SeededRng::new(31);
        let eig: Vec<f64> = (0..200).map(|_| rng.uniform_in(1e-6, 10.0)).collect();
        let sd = spectrum_density(&eig, 24).unwrap();
        assert!((sd.total_mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn density_floor_excludes_tiny_values() {
        let sd = spectrum_density(&[1.0, 1e-20, 0.0], 4).unwrap();
        assert_eq!(sd.n_eigenvalues, 1);
        assert_eq!(sd.n_excluded, 2);
    }

    #[test]
    fn density_rejects_zero_spectrum() {
        assert!(matches!(
            spectrum_density(&[0.0, 0.0], 4),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn broad_vs_narrow_support() {
        // Isotropic analog: tight spectrum -> narrow support.
        let mut rng = SeededRng::new(32);
        let narrow: Vec<f64> = (0..300).map(|_| rng.uniform_in(0.9, 1.1)).collect();
        let sd = spectrum_density(&narrow, 40).unwrap();
        assert!(sd.support_decades() < 1.0);
        // Low-rank analog: eigenvalues spanning many decades.
        let broad: Vec<f64> = (0..300)
            .map(|i| 10.0f64.powf(-5.0 * i as f64 / 299.0))
            .collect();
        let sd = spectrum_density(&broad, 40).unwrap();
        assert!(sd.support_decades() >= 4.0, "{} decades", sd.support_decades());
    }

    #[test]
    fn pick_k_trivial_cases() {
        assert_eq!(pick_k_for_variance(&[9.0, 1.0], 0.9).unwrap(), 1);
        assert_eq!(pick_k_for_variance(&[1.0; 10], 0.95).unwrap(), 10);
    }

    #[test]
    fn alignment_identities() {
        let mut rng = SeededRng::new(33);
        let u = random_orthonormal(24, 5, &mut rng);
        assert!((subspace_alignment(&u, &u).unwrap() - 1.0).abs() < 1e-9);

        // Orthogonal subspaces built from disjoint axis blocks.
        let mut a = Matrix::zeros(10, 3);
        let mut b = Matrix::zeros(10, 3);
        for j in 0..3 {
            a.set(j, j, 1.0);
            b.set(5 + j, j, 1.0);
        }
        assert!(subspace_alignment(&a, &b).unwrap().abs() < 1e-9);

        // Any subspace against the full space scores one.
        let full = Matrix::identity(24);
        assert!((subspace_alignment(&u, &full).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn alignment_requires_orthonormal_inputs() {
        let mut bad = Matrix::zeros(6, 2);
        bad.set(0, 0, 2.0);
        bad.set(1, 1, 1.0);
        let good = Matrix::identity(6);
        assert!(subspace_alignment(&bad, &good).is_err());
    }

    #[test]
    fn alignment_invariant_under_basis_rotation() {
        let mut rng = SeededRng::new(34);
        let u = random_orthonormal(16, 4, &mut rng);
        let v = random_orthonormal(16, 6, &mut rng);
        let base = subspace_alignment(&u, &v).unwrap();
        // Right-multiply U by a random 4x4 orthogonal matrix.
        let q = random_orthonormal(4, 4, &mut rng);
        let ru = u.matmul(&q);
        let rot = subspace_alignment(&ru, &v).unwrap();
        assert!((base - rot).abs() < 1e-9);
    }

    #[test]
    fn baseline_full_space_is_one() {
        let b = random_alignment_baseline(12, 12, 12, 5, 35).unwrap();
        assert!((b.mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn baseline_grows_with_m() {
        let b1 = random_alignment_baseline(40, 4, 4, 40, 36).unwrap();
        let b2 = random_alignment_baseline(40, 4, 20, 40, 36).unwrap();
        let b3 = random_alignment_baseline(40, 4, 40, 40, 36).unwrap();
        assert!(b1.mean < b2.mean && b2.mean < b3.mean);
        assert!((b3.mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn white_noise_psd_is_flat() {
        let mut rng = SeededRng::new(37);
        let images: Vec<Matrix> = (0..24)
            .map(|_| {
                Matrix::from_vec(64, 64, (0..64 * 64).map(|_| rng.normal()).collect()).unwrap()
            })
            .collect();
        let psd = radial_psd(&images).unwrap();
        assert!(psd.alpha().abs() <= 0.1, "alpha = {}", psd.alpha());
    }

    #[test]
    fn shaped_field_recovers_slope_two() {
        let mut rng = SeededRng::new(38);
        let images: Vec<Matrix> = (0..24)
            .map(|_| power_law_field(64, 2.0, &mut rng).unwrap())
            .collect();
        let psd = radial_psd(&images).unwrap();
        assert!(
            (psd.alpha() - 2.0).abs() <= 0.15,
            "alpha = {}",
            psd.alpha()
        );
    }

    #[test]
    fn constant_image_is_degenerate() {
        let img = Matrix::from_vec(8, 8, vec![0.7; 64]).unwrap();
        assert!(matches!(
            radial_psd(&[img]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn psd_invariant_under_quarter_rotation() {
        let mut rng = SeededRng::new(39);
        let side = 32;
        let img =
            Matrix::from_vec(side, side, (0..side * side).map(|_| rng.normal()).collect())
                .unwrap();
        let mut rotated = Matrix::zeros(side, side);
        for r in 0..side {
            for c in 0..side {
                rotated.set(c, side - 1 - r, img.get(r, c));
            }
        }
        let a = radial_psd(&[img]).unwrap();
        let b = radial_psd(&[rotated]).unwrap();
        for (x, y) in a.power.iter().zip(&b.power) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}
