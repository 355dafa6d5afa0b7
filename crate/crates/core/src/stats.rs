//! Small regression helpers shared by the rate and slope fits.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination. `1.0` when the data are exactly
    /// collinear, including the constant case.
    pub r_squared: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
///
/// Returns `None` for fewer than two points or when all `x` coincide.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let syy: f64 = y.iter().map(|yi| (yi - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut max_residual: f64 = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let r = yi - (slope * xi + intercept);
        ss_res += r * r;
        max_residual = max_residual.max(r.abs());
    }
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        max_residual,
    })
}

/// Kendall rank correlation (tau-a) between `x` and `y`.
///
/// Positive values indicate `y` increasing with `x`.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut score = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let s = sign(x[j] - x[i]) * sign(y[j] - y[i]);
            if s > 0.0 {
                score += 1;
            } else if s < 0.0 {
                score -= 1;
            }
        }
    }
    score as f64 / (n * (n - 1) / 2) as f64
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
