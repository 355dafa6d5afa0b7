//! Loops on the unit sphere, sampled uniformly in arc length, with their
//! geodesic curvature `κ = ⟨Γ×Γ″, Γ′⟩` and normal `n = Γ×Γ′`.

mod families;
pub mod pchip;

use std::io::{BufRead, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use families::{
    curve_registry, CurveFactory, CurveFamily, LatitudeCircle, PerturbedLatitude, Tabulated,
    SPHERE_TOL,
};

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

pub const MIN_SAMPLES: usize = 64;

/// Curvature error estimate above which a curve is flagged as under-resolved.
pub const KAPPA_ERROR_TOL: f64 = 1e-6;

/// Declarative curve description: a registered `kind` plus its parameters,
/// stored flat (`{"kind": "latitude_circle", "theta": 0.785}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub kind: String,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl CurveSpec {
    pub fn latitude(theta: f64) -> Self {
        Self::with("latitude_circle", serde_json::json!({ "theta": theta }))
    }

    pub fn perturbed_latitude(theta: f64, amplitude: f64, mode: u32) -> Self {
        Self::with(
            "perturbed_latitude",
            serde_json::json!({ "theta": theta, "amplitude": amplitude, "mode": mode }),
        )
    }

    pub fn tabulated(samples: &[[f64; 3]]) -> Self {
        Self::with("tabulated", serde_json::json!({ "samples": samples }))
    }

    fn with(kind: &str, params: Value) -> Self {
        let Value::Object(params) = params else {
            unreachable!()
        };
        Self {
            kind: kind.to_string(),
            params,
        }
    }

    pub fn family(&self) -> Result<CurveFactory> {
        curve_registry().build(&self.kind, &Value::Object(self.params.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    /// Uniform arc-length grid `sᵢ = i·ℓ/n`.
    pub s: Vec<f64>,
    pub gamma: Vec<[f64; 3]>,
    pub normal: Vec<[f64; 3]>,
    pub kappa: Vec<f64>,
    pub length: f64,
    /// Estimated max-norm error of `kappa`.
    pub kappa_error: f64,
    /// Set when `kappa_error` exceeds [`KAPPA_ERROR_TOL`].
    pub under_resolved: bool,
}

impl SampledCurve {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.len() as f64
    }

    pub fn mean_kappa(&self) -> f64 {
        self.kappa.iter().sum::<f64>() / self.len() as f64
    }

    /// `∫κ² ds` by the (spectrally accurate) periodic trapezoid rule.
    pub fn kappa_squared_integral(&self) -> f64 {
        self.kappa.iter().map(|k| k * k).sum::<f64>() * self.spacing()
    }

    /// Sum of great-circle distances between consecutive samples, closing
    /// the loop.
    pub fn geodesic_chord_length(&self) -> f64 {
        self.chord_sum(1)
    }

    /// Chord sums at spacing `h` and `2h` combined by Richardson
    /// extrapolation, removing the `O(h²κ²)` polygon deficit.
    pub fn extrapolated_chord_length(&self) -> f64 {
        (4.0 * self.chord_sum(1) - self.chord_sum(2)) / 3.0
    }

    fn chord_sum(&self, stride: usize) -> f64 {
        let n = self.len();
        (0..n)
            .step_by(stride)
            .map(|i| {
                let a = Vector3::from(self.gamma[i]);
                let b = Vector3::from(self.gamma[(i + stride) % n]);
                let c = (a - b).norm();
                2.0 * (0.5 * c).min(1.0).asin()
            })
            .sum()
    }

    /// The same loop with every point mapped through `rotation`, with the
    /// curvature recomputed from the rotated samples.
    pub fn rotated(&self, rotation: &nalgebra::Rotation3<f64>) -> SampledCurve {
        let mut out = self.clone();
        for p in out.gamma.iter_mut() {
            let q = rotation * Vector3::from(*p);
            *p = [q.x, q.y, q.z];
        }
        geodesic_curvature(&mut out);
        out
    }
}

/// Samples the loop described by `spec` at `n_samples` points uniformly
/// spaced in arc length.
pub fn build_curve(spec: &CurveSpec, n_samples: usize) -> Result<SampledCurve> {
    let family = spec.family()?;
    build_from_family(family.as_ref(), n_samples)
}

pub fn build_from_family(family: &dyn CurveFamily, n_samples: usize) -> Result<SampledCurve> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::precondition(format!(
            "need at least {MIN_SAMPLES} curve samples, got {n_samples}"
        )));
    }
    let table = ArcLengthTable::new(family, n_samples)?;
    let n = n_samples;
    let length = table.length();
    let h = length / n as f64;
    let mut gamma = Vec::with_capacity(n);
    for i in 0..n {
        let u = table.parameter_at(i as f64 * h)?;
        let p = family.point(u);
        gamma.push([p.x, p.y, p.z]);
    }
    let mut curve = SampledCurve {
        s: (0..n).map(|i| i as f64 * h).collect(),
        gamma,
        normal: Vec::new(),
        kappa: Vec::new(),
        length,
        kappa_error: 0.0,
        under_resolved: false,
    };
    check_simple(&curve)?;
    geodesic_curvature(&mut curve);
    Ok(curve)
}

/// Cumulative arc length of `p(u)` on quadrature panels, inverted by Newton.
struct ArcLengthTable<'a> {
    family: &'a dyn CurveFamily,
    edges: Vec<f64>,
    cumulative: Vec<f64>,
    rule: GaussRule,
}

impl<'a> ArcLengthTable<'a> {
    const PANELS_PER_SAMPLE: usize = 4;

    fn new(family: &'a dyn CurveFamily, n_samples: usize) -> Result<Self> {
        let period = family.period();
        let mut knots = family.knots();
        if knots.is_empty() {
            knots.push(0.0);
        }
        let target = Self::PANELS_PER_SAMPLE * n_samples;
        let per_knot = target.div_ceil(knots.len()).max(1);
        let mut edges = Vec::with_capacity(knots.len() * per_knot + 1);
        for (k, &start) in knots.iter().enumerate() {
            let end = knots.get(k + 1).copied().unwrap_or(knots[0] + period);
            for j in 0..per_knot {
                edges.push(start + (end - start) * j as f64 / per_knot as f64);
            }
        }
        edges.push(knots[0] + period);
        let rule = GaussRule::new(8);
        let speed = |u: f64| family.tangent(u).norm();
        let mut cumulative = Vec::with_capacity(edges.len());
        cumulative.push(0.0);
        for w in edges.windows(2) {
            let piece = rule.integrate(w[0], w[1], speed);
            if !(piece > 0.0) {
                return Err(Error::precondition(format!(
                    "curve is stationary on parameter interval [{}, {}]",
                    w[0], w[1]
                )));
            }
            cumulative.push(cumulative.last().unwrap() + piece);
        }
        Ok(Self {
            family,
            edges,
            cumulative,
            rule,
        })
    }

    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn parameter_at(&self, s: f64) -> Result<f64> {
        let k = self
            .cumulative
            .partition_point(|&c| c <= s)
            .saturating_sub(1)
            .min(self.edges.len() - 2);
        let (u0, u1) = (self.edges[k], self.edges[k + 1]);
        let (c0, c1) = (self.cumulative[k], self.cumulative[k + 1]);
        let speed = |u: f64| self.family.tangent(u).norm();
        let mut u = u0 + (s - c0) / (c1 - c0) * (u1 - u0);
        let tol = 4.0 * f64::EPSILON * self.length().max(1.0);
        for _ in 0..50 {
            let f = c0 + self.rule.integrate(u0, u, speed) - s;
            if f.abs() <= tol {
                return Ok(u);
            }
            u = (u - f / speed(u)).clamp(u0, u1);
        }
        Err(Error::non_convergence(format!(
            "arc-length inversion did not converge at s = {s}"
        )))
    }
}

/// Rejects loops that come closer than twice the sample spacing to
/// themselves away from the diagonal (index distance ≥ 4).
pub fn check_simple(curve: &SampledCurve) -> Result<()> {
    let n = curve.len();
    let threshold = 2.0 * curve.spacing();
    let pts: Vec<Vector3<f64>> = curve.gamma.iter().map(|p| Vector3::from(*p)).collect();
    for i in 0..n {
        for j in i + 4..n {
            if n - (j - i) < 4 {
                break;
            }
            let d = (pts[i] - pts[j]).norm();
            if d <= threshold {
                return Err(Error::precondition(format!(
                    "curve is not simple: samples {i} and {j} are {d:e} apart (threshold {threshold:e})"
                )));
            }
        }
    }
    Ok(())
}

const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [
    -1.0 / 12.0,
    16.0 / 12.0,
    -30.0 / 12.0,
    16.0 / 12.0,
    -1.0 / 12.0,
];

/// `κ` at every `stride`-th sample using the fourth-order periodic stencils
/// with step `stride·h`.
fn curvature_with_stride(
    gamma: &[Vector3<f64>],
    h: f64,
    stride: usize,
) -> (Vec<f64>, Vec<Vector3<f64>>) {
    let n = gamma.len();
    let step = stride as f64 * h;
    let mut kappa = Vec::with_capacity(n);
    let mut tangents = Vec::with_capacity(n);
    for i in 0..n {
        let mut d1 = Vector3::zeros();
        let mut d2 = Vector3::zeros();
        for (k, (c1, c2)) in D1.iter().zip(&D2).enumerate() {
            let offset = (k as isize - 2) * stride as isize;
            let j = (i as isize + offset).rem_euclid(n as isize) as usize;
            d1 += gamma[j] * *c1;
            d2 += gamma[j] * *c2;
        }
        d1 /= step;
        d2 /= step * step;
        kappa.push(gamma[i].cross(&d2).dot(&d1));
        tangents.push(d1);
    }
    (kappa, tangents)
}

/// Recomputes `kappa`, `normal` and the curvature error estimate from the
/// samples. The estimate compares against the same stencils at twice the
/// step, scaled by the fourth-order factor `1/15`.
pub fn geodesic_curvature(curve: &mut SampledCurve) {
    let h = curve.spacing();
    let gamma: Vec<Vector3<f64>> = curve.gamma.iter().map(|p| Vector3::from(*p)).collect();
    let (kappa, tangents) = curvature_with_stride(&gamma, h, 1);
    let (coarse, _) = curvature_with_stride(&gamma, h, 2);
    let error = kappa
        .iter()
        .zip(&coarse)
        .map(|(a, b)| (a - b).abs() / 15.0)
        .fold(0.0, f64::max);
    curve.normal = gamma
        .iter()
        .zip(&tangents)
        .map(|(g, t)| {
            let n = g.cross(t).normalize();
            [n.x, n.y, n.z]
        })
        .collect();
    curve.kappa = kappa;
    curve.kappa_error = error;
    curve.under_resolved = error > KAPPA_ERROR_TOL;
}

/// `κ_∞ = max |κ(sᵢ)|`.
pub fn sup_curvature(curve: &SampledCurve) -> f64 {
    curve.kappa.iter().fold(0.0, |m, k| m.max(k.abs()))
}

/// Reads loop samples from CSV with header `x,y,z` or `s,x,y,z` (the `s`
/// column is ignored; the loop is resampled).
pub fn read_curve_csv(reader: impl BufRead) -> Result<Vec<[f64; 3]>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("curve csv: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let offset = match names.as_slice() {
        ["x", "y", "z"] => 0,
        ["s", "x", "y", "z"] => 1,
        other => {
            return Err(Error::Parse(format!(
                "curve csv header must be `x,y,z` or `s,x,y,z`, got `{}`",
                other.join(",")
            )))
        }
    };
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("curve csv: {e}")))?;
        let mut p = [0.0; 3];
        for (k, slot) in p.iter_mut().enumerate() {
            let field = record.get(offset + k).unwrap_or("");
            *slot = field.parse().map_err(|_| {
                Error::Parse(format!(
                    "curve csv row {}: `{field}` is not a number",
                    line + 2
                ))
            })?;
        }
        out.push(p);
    }
    Ok(out)
}

/// Writes `s,x,y,z,kappa`.
pub fn write_curve_csv(curve: &SampledCurve, mut out: impl Write) -> Result<()> {
    writeln!(out, "s,x,y,z,kappa")?;
    for i in 0..curve.len() {
        let g = curve.gamma[i];
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            curve.s[i], g[0], g[1], g[2], curve.kappa[i]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn equator_is_geodesic() {
        let c = build_curve(&CurveSpec::latitude(FRAC_PI_2), 256).unwrap();
        assert!((c.length - 2.0 * PI).abs() < 1e-12);
        assert!(sup_curvature(&c) < 1e-8);
    }

    #[test]
    fn latitude_length_and_curvature() {
        let c = build_curve(&CurveSpec::latitude(FRAC_PI_4), 512).unwrap();
        assert!((c.length - PI * 2f64.sqrt()).abs() < 1e-12);
        for k in &c.kappa {
            assert!((k - 1.0).abs() < 1e-8);
        }
        assert!(!c.under_resolved);
    }

    #[test]
    fn small_grids_rejected() {
        assert!(build_curve(&CurveSpec::latitude(1.0), 32).is_err());
    }

    #[test]
    fn figure_eight_rejected() {
        // two latitude turns traversed twice overlap exactly
        let samples: Vec<[f64; 3]> = (0..64)
            .map(|i| {
                let u = 2.0 * std::f64::consts::TAU * i as f64 / 64.0;
                [u.cos() * 0.8, u.sin() * 0.8, 0.6]
            })
            .collect();
        let err = build_curve(&CurveSpec::tabulated(&samples), 128);
        assert!(err.is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = build_curve(&CurveSpec::latitude(1.0), 64).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,x,y,z,kappa\n"));
        // drop the kappa column to get an `s,x,y,z` table
        let trimmed: String = text
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
            .collect();
        let pts = read_curve_csv(trimmed.as_bytes()).unwrap();
        assert_eq!(pts.len(), 64);
        assert_eq!(pts[3], c.gamma[3]);
        assert!(read_curve_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
