//! Least squares fits and binomial intervals.
use alloc::vec::Vec;
use faer::linalg::solvers::SolveLstsqCore;
use faer::Mat;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 97.5% Student t quantiles, dof 1..=30.
const T975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
];

pub fn t_quantile_975(dof: usize) -> f64 {
    match dof {
        0 => f64::INFINITY,
        1..=30 => T975[dof - 1],
        31..=40 => 2.021,
        41..=60 => 2.000,
        61..=120 => 1.980,
        _ => 1.960,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 95% confidence interval of the slope.
    pub slope_ci: (f64, f64),
    pub residuals: Vec<f64>,
    pub n: usize,
}

impl LinearFit {
    pub fn negative_with_confidence(&self) -> bool {
        self.slope_ci.1 < 0.0
    }

    pub fn positive_with_confidence(&self) -> bool {
        self.slope_ci.0 > 0.0
    }
}

/// Ordinary least squares y = intercept + slope x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::Input("linear fit needs at least two (x, y) pairs".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Input("linear fit on non-finite data".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Input("linear fit with constant abscissa".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let (stderr, half) = if n > 2 {
        let s2 = residuals.iter().map(|r| r * r).sum::<f64>() / (nf - 2.0);
        let se = (s2 / sxx).sqrt();
        (se, t_quantile_975(n - 2) * se)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(LinearFit { slope, intercept, slope_stderr: stderr, slope_ci: (slope - half, slope + half), residuals, n })
}

/// Least squares coefficients for the columns `basis` (each of length rows).
pub fn lstsq(basis: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let rows = y.len();
    let cols = basis.len();
    if cols == 0 || rows < cols || basis.iter().any(|c| c.len() != rows) {
        return Err(Error::Input("least squares: inconsistent system".into()));
    }
    let a = Mat::<f64>::from_fn(rows, cols, |i, j| basis[j][i]);
    let mut x = Mat::<f64>::from_fn(rows, 1, |i, _| y[i]);
    a.qr().solve_lstsq_in_place_with_conj(faer::Conj::No, x.as_mut());
    let out: Vec<f64> = (0..cols).map(|j| x[(j, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("least squares: rank deficient".into()));
    }
    Ok(out)
}

/// Wilson score interval for k successes out of n.
pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let den = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / den;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / den;
    ((center - half).max(0.0), (center + half).min(1.0))
}
