//! Least-squares line fits in log-log coordinates.

use crate::error::{Error, Result};

/// Fitted power law `y = exp(intercept) * x^slope`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    /// Intercept in log space; zero for through-origin fits.
    pub intercept: f64,
}

/// Ordinary least squares on `(ln x, ln y)`.
///
/// With `through_origin` the intercept is constrained to zero (the form used
/// by the two-nearest-neighbor regression); otherwise both parameters are
/// free. All inputs must be strictly positive.
pub fn fit_slope_loglog(xs: &[f64], ys: &[f64], through_origin: bool) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("fit_slope_loglog: length mismatch"));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("fit_slope_loglog needs at least 2 points"));
    }
    if xs.iter().chain(ys).any(|&v| !v.is_finite() || v <= 0.0) {
        return Err(Error::invalid(
            "fit_slope_loglog requires strictly positive finite values",
        ));
    }

    let us: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let vs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();

    if through_origin {
        let sxx: f64 = us.iter().map(|u| u * u).sum();
        if sxx == 0.0 {
            return Err(Error::degenerate(
                "through-origin fit with all x equal to 1",
            ));
        }
        let sxy: f64 = us.iter().zip(&vs).map(|(u, v)| u * v).sum();
        return Ok(LineFit {
            slope: sxy / sxx,
            intercept: 0.0,
        });
    }

    let n = us.len() as f64;
    let u_mean = us.iter().sum::<f64>() / n;
    let v_mean = vs.iter().sum::<f64>() / n;
    let sxx: f64 = us.iter().map(|u| (u - u_mean) * (u - u_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::degenerate("fit_slope_loglog: all x values equal"));
    }
    let sxy: f64 = us
        .iter()
        .zip(&vs)
        .map(|(u, v)| (u - u_mean) * (v - v_mean))
        .sum();
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: v_mean - slope * u_mean,
    })
}

/// Plain OLS slope of `ys` against `xs` in linear coordinates; used for
/// scaling-curve diagnostics.
pub fn fit_slope_linear(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("fit_slope_linear needs >= 2 paired points"));
    }
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::degenerate("fit_slope_linear: all x values equal"));
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: y_mean - slope * x_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::SeededRng;

    #[test]
    fn exact_inverse_square_law() {
        let xs: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(-2)).collect();
        let fit = fit_slope_loglog(&xs, &ys, false).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_ys_give_zero_slope() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let ys = vec![3.7; 10];
        let fit = fit_slope_loglog(&xs, &ys, false).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law_within_tolerance() {
        // ys = 5 x^-1 (1 + eps), eps uniform in +-1%.
        let mut rng = SeededRng::new(2024);
        let xs: Vec<f64> = (0..100).map(|i| 10f64.powf(i as f64 / 49.5)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 5.0 / x * (1.0 + rng.uniform_in(-0.01, 0.01)))
            .collect();
        let fit = fit_slope_loglog(&xs, &ys, false).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.02, "slope = {}", fit.slope);
    }

    #[test]
    fn rejects_nonpositive_values() {
        assert!(fit_slope_loglog(&[1.0, 0.0], &[1.0, 1.0], false).is_err());
        assert!(fit_slope_loglog(&[1.0, 2.0], &[1.0, -1.0], false).is_err());
    }

    #[test]
    fn through_origin_matches_exact_law() {
        let xs = [2.0f64, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(3)).collect();
        let fit = fit_slope_loglog(&xs, &ys, true).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert_eq!(fit.intercept, 0.0);
    }
}
