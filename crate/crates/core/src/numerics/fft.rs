//! 2-D discrete Fourier transform for square power-of-two grids.
//!
//! Iterative radix-2 transform applied to rows then columns. The forward
//! transform is unnormalized; the inverse divides by the grid size so that
//! `ifft2(fft2(x)) == x` up to roundoff.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

/// Minimal complex number; only what the transform needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// Squared magnitude.
    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

impl std::ops::Add for Complex {
    type Output = Complex;
    #[inline]
    fn add(self, other: Complex) -> Complex {
        Complex {
            re: self.re + other.re,
            im: self.im + other.im,
        }
    }
}

impl std::ops::Sub for Complex {
    type Output = Complex;
    #[inline]
    fn sub(self, other: Complex) -> Complex {
        Complex {
            re: self.re - other.re,
            im: self.im - other.im,
        }
    }
}

impl std::ops::Mul for Complex {
    type Output = Complex;
    #[inline]
    fn mul(self, other: Complex) -> Complex {
        Complex {
            re: self.re * other.re - self.im * other.im,
            im: self.re * other.im + self.im * other.re,
        }
    }
}

/// Square grid of complex values, row-major.
#[derive(Debug, Clone)]
pub struct ComplexGrid {
    side: usize,
    data: Vec<Complex>,
}

impl ComplexGrid {
    pub fn from_parts(side: usize, data: Vec<Complex>) -> Self {
        assert_eq!(data.len(), side * side, "complex grid shape mismatch");
        Self { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Complex {
        self.data[u * self.side + v]
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }
}

/// In-place radix-2 transform of a power-of-two-length buffer.
/// `sign = -1.0` gives the forward convention `sum x_k e^{-2pi i k n / N}`.
fn fft_pow2(buf: &mut [Complex], sign: f64) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    debug_assert!(n.is_power_of_two());

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 0..n {
        if i < j {
            buf.swap(i, j);
        }
        let mut mask = n >> 1;
        while mask > 0 && j & mask != 0 {
            j &= !mask;
            mask >>= 1;
        }
        j |= mask;
    }

    let mut len = 2;
    while len <= n {
        let angle = sign * 2.0 * std::f64::consts::PI / len as f64;
        let w_len = Complex::new(angle.cos(), angle.sin());
        for start in (0..n).step_by(len) {
            let mut w = Complex::new(1.0, 0.0);
            for k in 0..len / 2 {
                let a = buf[start + k];
                let b = buf[start + k + len / 2] * w;
                buf[start + k] = a + b;
                buf[start + k + len / 2] = a - b;
                w = w * w_len;
            }
        }
        len <<= 1;
    }
}

fn check_side(side: usize) -> Result<()> {
    if side == 0 {
        return Err(Error::invalid("fft2 requires a nonempty grid"));
    }
    if !side.is_power_of_two() {
        return Err(Error::invalid(format!(
            "fft2 requires a power-of-two side, got {side}"
        )));
    }
    Ok(())
}

fn transform2(data: &mut [Complex], side: usize, sign: f64) {
    let mut row_buf = vec![Complex::ZERO; side];
    for r in 0..side {
        row_buf.copy_from_slice(&data[r * side..(r + 1) * side]);
        fft_pow2(&mut row_buf, sign);
        data[r * side..(r + 1) * side].copy_from_slice(&row_buf);
    }
    let mut col_buf = vec![Complex::ZERO; side];
    for c in 0..side {
        for r in 0..side {
            col_buf[r] = data[r * side + c];
        }
        fft_pow2(&mut col_buf, sign);
        for r in 0..side {
            data[r * side + c] = col_buf[r];
        }
    }
}

/// Unnormalized forward 2-D DFT of a real square grid.
pub fn fft2(image: &Matrix) -> Result<ComplexGrid> {
    if image.rows() != image.cols() {
        return Err(Error::invalid(format!(
            "fft2 requires a square grid, got {}x{}",
            image.rows(),
            image.cols()
        )));
    }
    let side = image.rows();
    check_side(side)?;
    let mut data: Vec<Complex> = image
        .as_slice()
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    transform2(&mut data, side, -1.0);
    Ok(ComplexGrid { side, data })
}

/// Inverse 2-D DFT, normalized by the grid size; returns the real parts.
pub fn ifft2(grid: &ComplexGrid) -> Result<Matrix> {
    let side = grid.side;
    check_side(side)?;
    let mut data = grid.data.clone();
    transform2(&mut data, side, 1.0);
    let scale = 1.0 / (side * side) as f64;
    Matrix::from_vec(side, side, data.iter().map(|c| c.re * scale).collect())
}
