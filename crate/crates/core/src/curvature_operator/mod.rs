//! The curvature-induced operator `𝒦 = −d²/ds² − κ²/4` on the circle of
//! length `ℓ`, and the constant `k = (1/2π)·Σ_{λⱼ<0} √(−λⱼ)`.
//!
//! Two discretizations are registered: second-order finite differences
//! (`fd`, with Richardson correction) and a truncated Fourier basis
//! (`fourier`). [`ks_constant`] runs both and cross-checks them.

mod methods;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use methods::{
    kappa_squared_coefficients, kappa_squared_on_grid, method_registry, FiniteDifference,
    FourierBasis, SpectrumFactory, SpectrumMethod,
};

use crate::error::{Error, Result};
use crate::geometry::SampledCurve;
use crate::spectral1d::EigResult;

pub const MIN_RESOLUTION: usize = 128;

/// Relative agreement between the two methods required for `verified`.
pub const CROSS_CHECK_TOL: f64 = 1e-4;

/// Eigenvalues of `𝒦` using the named method.
pub fn ks_spectrum(curve: &SampledCurve, n: usize, method: &str, k: usize) -> Result<EigResult> {
    if n < MIN_RESOLUTION {
        return Err(Error::precondition(format!(
            "curvature operator needs n ≥ {MIN_RESOLUTION}, got {n}"
        )));
    }
    if curve.kappa.len() != curve.len() {
        return Err(Error::precondition("curve has no curvature field"));
    }
    method_registry()
        .build(method, &Value::Null)?
        .spectrum(curve, n, k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KsOptions {
    /// Primary method name.
    pub method: String,
    /// Resolution of the primary method.
    pub n: usize,
    /// Method used for the cross-check.
    pub check_method: String,
    /// Resolution of the cross-check method.
    pub check_n: usize,
    /// Eigenvalues reported above the last negative one.
    pub extra: usize,
}

impl Default for KsOptions {
    fn default() -> Self {
        Self {
            method: "fd".into(),
            n: 1024,
            check_method: "fourier".into(),
            check_n: 256,
            extra: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub method: String,
    pub n: usize,
    pub k_s: f64,
    /// Relative difference of the two `k` values (absolute when both vanish).
    pub relative_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub ell: f64,
    /// Lowest eigenvalues, through `extra` values above the negative ones.
    pub eigenvalues: Vec<f64>,
    /// Error estimate per reported eigenvalue.
    pub eigenvalue_errors: Vec<f64>,
    pub negative_part: Vec<f64>,
    #[serde(rename = "k_S")]
    pub k_s: f64,
    /// Interval obtained by shifting every eigenvalue by its error estimate.
    #[serde(rename = "k_S_uncertainty")]
    pub k_s_uncertainty: [f64; 2],
    /// Largest relative eigenvalue difference between the two methods over
    /// the reported values.
    pub method_diff: f64,
    pub method: String,
    pub n: usize,
    pub cross_check: CrossCheck,
    pub verified: bool,
    /// Eigenvalues within ten error estimates of zero.
    pub ambiguous: Vec<f64>,
}

/// `(1/2π)·Σ_{λ<0} √(−λ)`.
pub fn k_from_values(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&v| v < 0.0)
        .map(|v| (-v).sqrt())
        .fold(0.0, |a, b| a + b)
        / (2.0 * std::f64::consts::PI)
}

pub fn ks_constant(curve: &SampledCurve) -> Result<KsReport> {
    ks_constant_with(curve, &KsOptions::default())
}

pub fn ks_constant_with(curve: &SampledCurve, opts: &KsOptions) -> Result<KsReport> {
    let primary = method_registry().build(&opts.method, &Value::Null)?;
    let check = method_registry().build(&opts.check_method, &Value::Null)?;
    for n in [opts.n, opts.check_n] {
        if n < MIN_RESOLUTION {
            return Err(Error::precondition(format!(
                "curvature operator needs n ≥ {MIN_RESOLUTION}, got {n}"
            )));
        }
    }
    let negatives = primary.negative_count(curve, opts.n)?;
    let k = negatives + opts.extra;
    let (first, second) = rayon::join(
        || primary.spectrum(curve, opts.n, k),
        || check.spectrum(curve, opts.check_n, k),
    );
    let (first, second) = (first?, second?);
    let values = first.extrapolated();
    let other = second.extrapolated();

    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let errors: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let richardson = first.richardson_error.as_ref().map_or(0.0, |e| e[j].abs());
            let methods = (v - other[j]).abs();
            richardson.max(methods).max(64.0 * f64::EPSILON * scale)
        })
        .collect();
    let method_diff = values
        .iter()
        .zip(&other)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);

    let k_s = k_from_values(&values);
    let shifted = |sign: f64| -> Vec<f64> {
        values
            .iter()
            .zip(&errors)
            .map(|(v, e)| v + sign * e)
            .collect()
    };
    let k_s_uncertainty = [k_from_values(&shifted(1.0)), k_from_values(&shifted(-1.0))];
    let ambiguous = values
        .iter()
        .zip(&errors)
        .filter(|(v, e)| v.abs() < 10.0 * **e)
        .map(|(v, _)| *v)
        .collect();
    let k_check = k_from_values(&other);
    let relative_difference = if k_s == 0.0 && k_check == 0.0 {
        0.0
    } else {
        (k_s - k_check).abs() / k_s.abs().max(k_check.abs())
    };
    Ok(KsReport {
        ell: curve.length,
        negative_part: values.iter().copied().filter(|v| *v < 0.0).collect(),
        eigenvalues: values,
        eigenvalue_errors: errors,
        k_s,
        k_s_uncertainty,
        method_diff,
        method: opts.method.clone(),
        n: opts.n,
        verified: relative_difference < CROSS_CHECK_TOL,
        cross_check: CrossCheck {
            method: opts.check_method.clone(),
            n: opts.check_n,
            k_s: k_check,
            relative_difference,
        },
        ambiguous,
    })
}
