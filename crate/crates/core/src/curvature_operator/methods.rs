//! Discretizations of `−d²/ds² − κ²/4` on the circle.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::SampledCurve;
use crate::registry::{parse_params, Registry};
use crate::spectral1d::{
    assemble, lowest_eigenvalues_with, BoundaryKind, EigOptions, EigResult, Grid1D,
};

pub trait SpectrumMethod: Send + Sync {
    fn name(&self) -> &'static str;

    /// The `k` lowest eigenvalues at resolution `n`.
    fn spectrum(&self, curve: &SampledCurve, n: usize, k: usize) -> Result<EigResult>;

    /// Number of strictly negative eigenvalues at resolution `n`.
    fn negative_count(&self, curve: &SampledCurve, n: usize) -> Result<usize>;
}

/// Fourier coefficients of the trigonometric interpolant of `κ²` through
/// the `N` curve samples, `c_m = (1/N) Σⱼ κ(sⱼ)² e^{−2πi m j/N}` for
/// `0 ≤ m ≤ m_max`, by direct summation. The interpolant is band limited:
/// `c_m = 0` for `m > N/2`, and for even `N` the Nyquist term is split
/// evenly between `±N/2`.
pub fn kappa_squared_coefficients(curve: &SampledCurve, m_max: usize) -> Vec<Complex<f64>> {
    let n = curve.len();
    (0..=m_max)
        .map(|m| {
            if 2 * m > n {
                return Complex::new(0.0, 0.0);
            }
            let mut acc = Complex::new(0.0, 0.0);
            for (j, k) in curve.kappa.iter().enumerate() {
                // reduce the phase index exactly before converting to an angle
                let phase = TAU * ((m * j) % n) as f64 / n as f64;
                acc += Complex::from_polar(k * k, -phase);
            }
            let nyquist = if 2 * m == n { 0.5 } else { 1.0 };
            acc * (nyquist / n as f64)
        })
        .collect()
}

/// `κ²` on `n` equispaced points of the circle: subsampled when `n` divides
/// the curve resolution, trigonometric interpolation otherwise.
pub fn kappa_squared_on_grid(curve: &SampledCurve, n: usize) -> Vec<f64> {
    let big = curve.len();
    if big.is_multiple_of(n) {
        let stride = big / n;
        return (0..n).map(|i| curve.kappa[i * stride].powi(2)).collect();
    }
    let half = big / 2;
    let c = kappa_squared_coefficients(curve, half);
    (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let mut v = c[0].re;
            for (m, cm) in c.iter().enumerate().skip(1) {
                v += 2.0 * (cm * Complex::from_polar(1.0, m as f64 * t)).re;
            }
            v
        })
        .collect()
}

/// Second-order finite differences with Richardson correction from the
/// half-resolution problem.
#[derive(Debug, Clone, Copy, Default)]
pub struct FiniteDifference;

impl FiniteDifference {
    fn operator(curve: &SampledCurve, n: usize) -> Result<crate::spectral1d::Operator1D> {
        let grid = Grid1D::new(BoundaryKind::Periodic, 0.0, curve.length, n)?;
        let v: Vec<f64> = kappa_squared_on_grid(curve, n)
            .iter()
            .map(|k| -0.25 * k)
            .collect();
        assemble(&v, &grid)
    }
}

impl SpectrumMethod for FiniteDifference {
    fn name(&self) -> &'static str {
        "fd"
    }

    fn spectrum(&self, curve: &SampledCurve, n: usize, k: usize) -> Result<EigResult> {
        let op = Self::operator(curve, n)?;
        let opts = EigOptions {
            tol: 0.0,
            vectors: false,
            richardson: n.is_multiple_of(2),
        };
        lowest_eigenvalues_with(&op, k, &opts)
    }

    fn negative_count(&self, curve: &SampledCurve, n: usize) -> Result<usize> {
        let op = Self::operator(curve, n)?;
        // strictly below zero
        Ok(op.inertia_below(0.0))
    }
}

/// Galerkin discretization in `e^{2πims/ℓ}`, `|m| ≤ n/2`, with the
/// potential applied as a circular convolution of its Fourier coefficients.
#[derive(Debug, Clone, Copy, Default)]
pub struct FourierBasis;

impl FourierBasis {
    fn eigenvalues(curve: &SampledCurve, n: usize) -> Result<Vec<f64>> {
        let half = n / 2;
        let c = kappa_squared_coefficients(curve, 2 * half);
        let dim = 2 * half + 1;
        let wave = TAU / curve.length;
        let mut h = DMatrix::<Complex<f64>>::zeros(dim, dim);
        for a in 0..dim {
            let ma = a as isize - half as isize;
            for b in 0..dim {
                let mb = b as isize - half as isize;
                let d = ma - mb;
                let coeff = if d >= 0 {
                    c[d as usize]
                } else {
                    c[(-d) as usize].conj()
                };
                h[(a, b)] = coeff * -0.25;
            }
            h[(a, a)] += Complex::new((wave * ma as f64).powi(2), 0.0);
        }
        let mut values: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }
}

impl SpectrumMethod for FourierBasis {
    fn name(&self) -> &'static str {
        "fourier"
    }

    fn spectrum(&self, curve: &SampledCurve, n: usize, k: usize) -> Result<EigResult> {
        let values = Self::eigenvalues(curve, n)?;
        if k > values.len() {
            return Err(Error::precondition(format!(
                "requested {k} eigenvalues from a basis of size {}",
                values.len()
            )));
        }
        Ok(EigResult {
            values: values[..k].to_vec(),
            vectors: None,
            kind: BoundaryKind::Periodic,
            grid: Grid1D::new(BoundaryKind::Periodic, 0.0, curve.length, n)?,
            richardson_error: None,
        })
    }

    fn negative_count(&self, curve: &SampledCurve, n: usize) -> Result<usize> {
        Ok(Self::eigenvalues(curve, n)?
            .iter()
            .filter(|v| **v < 0.0)
            .count())
    }
}

pub type SpectrumFactory = Box<dyn SpectrumMethod>;

pub fn method_registry() -> &'static Registry<SpectrumFactory> {
    static REGISTRY: OnceLock<Registry<SpectrumFactory>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut r = Registry::new("spectrum method");
        r.register("fd", |v: &Value| {
            parse_params::<serde_json::Map<String, Value>>("fd", v).and_then(no_params("fd"))?;
            Ok(Box::new(FiniteDifference) as SpectrumFactory)
        });
        r.register("fourier", |v: &Value| {
            parse_params::<serde_json::Map<String, Value>>("fourier", v)
                .and_then(no_params("fourier"))?;
            Ok(Box::new(FourierBasis) as SpectrumFactory)
        });
        r
    })
}

fn no_params(name: &'static str) -> impl Fn(serde_json::Map<String, Value>) -> Result<()> {
    move |m| match m.keys().next() {
        None => Ok(()),
        Some(key) => Err(Error::config(name, format!("unknown parameter `{key}`"))),
    }
}
