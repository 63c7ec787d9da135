//! Synthetic low-dimensional class datasets.
//!
//! Each class is a random `d_nat`-dimensional affine patch inside the unit
//! hypercube: uniform coefficients mapped through a random orthonormal
//! basis, Gaussian noise added, coordinates clipped to `[0, 1]`. The patch
//! scale is chosen so the per-class participation ratio lands near `d_nat`.

use crate::error::{Error, Result};
use crate::numerics::orthonormal::random_orthonormal;
use crate::numerics::rng::SeededRng;
use crate::sample_set::{SampleMeta, SampleSet};

/// Half-width of the uniform coefficient distribution along each patch axis.
const PATCH_SCALE: f64 = 0.62;
/// Classes 0 and 1 form a contested pair: centers offset by this gap on
/// every coordinate along a random sign vector. The pair is cleanly
/// separable in L2 (the gaps aggregate) but admits only a thin worst-case
/// L-infinity margin, like the hardest class pairs of natural datasets.
const CLOSE_PAIR_GAP: f64 = 0.05;
/// Per-coordinate band for the remaining class centers; their pairwise
/// worst-case margins vary by coordinate, so the robust task stays
/// partially contested without a clean escape margin.
const FAR_BAND: (f64, f64) = (0.2, 0.8);
/// A patch draw is declared infeasible when more than this fraction of
/// coordinates had to be clipped.
const MAX_CLIP_FRACTION: f64 = 0.01;

/// Labeled synthetic dataset: one sample set per class.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub ambient_dim: usize,
    pub n_classes: usize,
    pub intrinsic_dim_per_class: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Per-class points; index = class label.
    pub classes: Vec<SampleSet>,
    /// Classes that needed a shrunken patch before fitting the hypercube.
    pub patch_retries: usize,
}

impl SynthDataset {
    pub fn n_total(&self) -> usize {
        self.classes.iter().map(|c| c.n_samples()).sum()
    }

    /// Iterate `(point, label)` pairs in class-major order.
    pub fn examples(&self) -> impl Iterator<Item = (&[f64], usize)> {
        self.classes
            .iter()
            .enumerate()
            .flat_map(|(label, set)| set.rows().map(move |r| (r, label)))
    }

    /// Owned `(point, label)` pairs, the form the attack evaluators take.
    pub fn to_examples(&self) -> Vec<(Vec<f64>, usize)> {
        self.examples().map(|(x, l)| (x.to_vec(), l)).collect()
    }

    /// Fraction of examples the model classifies correctly.
    pub fn clean_accuracy(&self, model: &crate::model::MlpModel) -> Result<f64> {
        let mut correct = 0usize;
        let mut total = 0usize;
        for (x, label) in self.examples() {
            if model.predict(x)? == label {
                correct += 1;
            }
            total += 1;
        }
        Ok(correct as f64 / total as f64)
    }
}

/// Generate a synthetic dataset.
///
/// Per class: a random `d_nat`-dimensional affine patch; points are uniform
/// coefficients through the patch basis plus isotropic Gaussian noise,
/// clipped to the hypercube. A class whose draw clips too many coordinates
/// is retried with a shrunken patch (counted in `patch_retries`).
pub fn synth_dataset(
    ambient_dim: usize,
    n_classes: usize,
    d_nat: usize,
    n_per_class: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<SynthDataset> {
    if d_nat >= ambient_dim {
        return Err(Error::invalid(format!(
            "intrinsic dimension {d_nat} must be below ambient dimension {ambient_dim}"
        )));
    }
    if n_classes < 2 {
        return Err(Error::invalid("need at least 2 classes"));
    }
    if n_per_class == 0 {
        return Err(Error::invalid("need at least one point per class"));
    }

    // Tuning hooks for the contested-pair and far-class gaps.
    let gap: f64 = std::env::var("PMLAB_TUNE_GAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(CLOSE_PAIR_GAP);
    let far: f64 = std::env::var("PMLAB_TUNE_BAND")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(FAR_BAND.1 - FAR_BAND.0);
    let far_band = (0.5 - far / 2.0, 0.5 + far / 2.0);

    // The contested-pair axis: a sign vector from a dataset-level stream.
    let mut axis_rng = SeededRng::with_stream(seed, 0);
    let pair_axis: Vec<f64> = (0..ambient_dim)
        .map(|_| if axis_rng.uniform() < 0.5 { -1.0 } else { 1.0 })
        .collect();

    let mut classes = Vec::with_capacity(n_classes);
    let mut patch_retries = 0usize;
    for label in 0..n_classes {
        // One stream per class so classes are independent and reproducible.
        let mut rng = SeededRng::with_stream(seed, label as u64 + 1);
        let mut scale = PATCH_SCALE;
        let center: Vec<f64> = match label {
            0 => pair_axis.iter().map(|&s| 0.5 - s * gap / 2.0).collect(),
            1 => pair_axis.iter().map(|&s| 0.5 + s * gap / 2.0).collect(),
            _ => (0..ambient_dim)
                .map(|_| rng.uniform_in(far_band.0, far_band.1))
                .collect(),
        };
        loop {
            let (set, clipped_fraction) = draw_class(
                ambient_dim,
                d_nat,
                n_per_class,
                noise_sigma,
                scale,
                &center,
                seed,
                label,
                &mut rng,
            );
            if clipped_fraction <= MAX_CLIP_FRACTION {
                classes.push(set);
                break;
            }
            patch_retries += 1;
            scale *= 0.8;
            if scale < 1e-3 {
                return Err(Error::degenerate(format!(
                    "class {label}: patch cannot be fit inside the hypercube"
                )));
            }
        }
    }

    Ok(SynthDataset {
        ambient_dim,
        n_classes,
        intrinsic_dim_per_class: d_nat,
        noise_sigma,
        seed,
        classes,
        patch_retries,
    })
}

#[allow(clippy::too_many_arguments)]
fn draw_class(
    ambient_dim: usize,
    d_nat: usize,
    n_per_class: usize,
    noise_sigma: f64,
    scale: f64,
    center: &[f64],
    seed: u64,
    label: usize,
    rng: &mut SeededRng,
) -> (SampleSet, f64) {
    let basis = random_orthonormal(ambient_dim, d_nat, rng);

    let meta = SampleMeta::new(seed, format!("synth(d_nat={d_nat})")).with_label(label as u32);
    let mut set = SampleSet::empty(ambient_dim, meta);
    let mut clipped = 0usize;
    let mut point = vec![0.0; ambient_dim];
    for _ in 0..n_per_class {
        let coeffs: Vec<f64> = (0..d_nat).map(|_| rng.uniform_in(-scale, scale)).collect();
        point.copy_from_slice(center);
        for (j, &u) in coeffs.iter().enumerate() {
            for (p, i) in point.iter_mut().zip(0..ambient_dim) {
                *p += u * basis.get(i, j);
            }
        }
        if noise_sigma > 0.0 {
            for p in point.iter_mut() {
                *p += noise_sigma * rng.normal();
            }
        }
        for p in point.iter_mut() {
            if *p < 0.0 || *p > 1.0 {
                clipped += 1;
                *p = p.clamp(0.0, 1.0);
            }
        }
        set.push_row(&point);
    }
    let fraction = clipped as f64 / (n_per_class * ambient_dim) as f64;
    (set, fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::{pr_of_samples, two_nn};

    #[test]
    fn noiseless_class_pr_near_intrinsic_dim() {
        let ds = synth_dataset(64, 3, 4, 3000, 0.0, 11).unwrap();
        for class in &ds.classes {
            let pr = pr_of_samples(class).unwrap().estimate;
            assert!(pr > 3.5 && pr < 4.5, "PR = {pr}");
        }
    }

    #[test]
    fn noisy_class_pr_within_twenty_percent() {
        let ds = synth_dataset(64, 3, 4, 5000, 0.02, 12).unwrap();
        for class in &ds.classes {
            let pr = pr_of_samples(class).unwrap().estimate;
            assert!(
                (pr - 4.0).abs() / 4.0 <= 0.2,
                "PR = {pr} departs from d_nat = 4 by more than 20%"
            );
        }
    }

    #[test]
    fn one_dimensional_class_has_two_nn_near_one() {
        let ds = synth_dataset(64, 2, 1, 4000, 0.0, 13).unwrap();
        let est = two_nn(&ds.classes[0]).unwrap().estimate;
        assert!((est - 1.0).abs() <= 0.15, "2NN = {est}");
    }

    #[test]
    fn points_stay_in_hypercube() {
        let ds = synth_dataset(32, 3, 4, 500, 0.05, 14).unwrap();
        for class in &ds.classes {
            assert!(class.in_unit_cube());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = synth_dataset(16, 2, 3, 50, 0.01, 15).unwrap();
        let b = synth_dataset(16, 2, 3, 50, 0.01, 15).unwrap();
        for (ca, cb) in a.classes.iter().zip(&b.classes) {
            assert_eq!(ca.as_flat(), cb.as_flat());
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(synth_dataset(8, 2, 8, 10, 0.0, 0).is_err());
        assert!(synth_dataset(8, 1, 2, 10, 0.0, 0).is_err());
    }
}
