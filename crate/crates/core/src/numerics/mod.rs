//! Shared deterministic numerical kernels: covariance, symmetric
//! eigendecomposition, 2-D FFT, least-squares fits, and seeded random
//! generation. Everything here is pure given its inputs and seeds.

pub mod eigen;
pub mod fft;
pub mod fit;
pub mod matrix;
pub mod orthonormal;
pub mod rng;

pub use eigen::{sym_eig, EigenDecomposition};
pub use fft::{fft2, ifft2, Complex, ComplexGrid};
pub use fit::{fit_slope_linear, fit_slope_loglog, LineFit};
pub use matrix::{covariance, dot, Matrix};
pub use orthonormal::{orthonormalize_columns, random_orthonormal};
pub use rng::{SeededRng, RNG_NAME};

/// Compensated (Kahan) summation; used wherever an aggregate must not depend
/// on evaluation order or worker count.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Mean and standard error of the mean, computed with compensated sums.
pub fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = kahan_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean and sample standard deviation.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = kahan_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64;
    (mean, var.sqrt())
}
