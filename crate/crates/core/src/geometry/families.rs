//! Curve families: closed loops `p(u)` on the unit sphere, `u ∈ [0, period)`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::OnceLock;

use nalgebra::Vector3;
use serde::Deserialize;
use serde_json::Value;

use super::pchip::PeriodicPchip;
use crate::error::{Error, Result};
use crate::registry::{parse_params, Registry};

/// Largest allowed deviation of a tabulated sample from the unit sphere.
pub const SPHERE_TOL: f64 = 1e-10;

/// A smooth closed parametrized loop on the unit sphere.
pub trait CurveFamily: Send + Sync {
    fn name(&self) -> &'static str;

    fn period(&self) -> f64 {
        TAU
    }

    fn point(&self, u: f64) -> Vector3<f64>;

    /// `dp/du`.
    fn tangent(&self, u: f64) -> Vector3<f64>;

    /// Parameter values where the map is only piecewise smooth. Arc-length
    /// quadrature panels are aligned with them.
    fn knots(&self) -> Vec<f64> {
        Vec::new()
    }
}

fn latitude_point(theta: f64, u: f64) -> Vector3<f64> {
    // traversed so that the geodesic curvature is +cot θ
    let (st, ct) = theta.sin_cos();
    Vector3::new(st * u.cos(), -st * u.sin(), ct)
}

fn latitude_tangent(theta: f64, u: f64) -> Vector3<f64> {
    let st = theta.sin();
    Vector3::new(-st * u.sin(), -st * u.cos(), 0.0)
}

/// Unit vector along increasing polar angle at the latitude point.
fn meridian(theta: f64, u: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (st, ct) = theta.sin_cos();
    let e = Vector3::new(ct * u.cos(), -ct * u.sin(), -st);
    let de = Vector3::new(-ct * u.sin(), -ct * u.cos(), 0.0);
    (e, de)
}

/// Slack above `π/2` so that decimal inputs such as `1.5708` are accepted.
pub const THETA_SLACK: f64 = 5e-5;

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 && theta <= FRAC_PI_2 + THETA_SLACK {
        Ok(())
    } else {
        Err(Error::config(
            "theta",
            format!("polar angle must lie in (0, π/2], got {theta}"),
        ))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LatitudeCircle {
    pub theta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LatitudeParams {
    theta: f64,
}

impl CurveFamily for LatitudeCircle {
    fn name(&self) -> &'static str {
        "latitude_circle"
    }

    fn point(&self, u: f64) -> Vector3<f64> {
        latitude_point(self.theta, u)
    }

    fn tangent(&self, u: f64) -> Vector3<f64> {
        latitude_tangent(self.theta, u)
    }
}

/// Latitude circle pushed along the meridians:
/// `p(u) = normalize(b(u) + amplitude·sin(mode·u)·e_θ(u))`, where `b` is the
/// latitude point and `e_θ` the unit meridian vector there. The map is
/// real-analytic.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedLatitude {
    pub theta: f64,
    pub amplitude: f64,
    pub mode: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbedParams {
    theta: f64,
    amplitude: f64,
    mode: u32,
}

impl PerturbedLatitude {
    fn raw(&self, u: f64) -> (Vector3<f64>, Vector3<f64>) {
        let a = self.amplitude;
        let m = self.mode as f64;
        let (e, de) = meridian(self.theta, u);
        let (sm, cm) = (m * u).sin_cos();
        let q = latitude_point(self.theta, u) + e * (a * sm);
        let dq = latitude_tangent(self.theta, u) + e * (a * m * cm) + de * (a * sm);
        (q, dq)
    }
}

impl CurveFamily for PerturbedLatitude {
    fn name(&self) -> &'static str {
        "perturbed_latitude"
    }

    fn point(&self, u: f64) -> Vector3<f64> {
        self.raw(u).0.normalize()
    }

    fn tangent(&self, u: f64) -> Vector3<f64> {
        let (q, dq) = self.raw(u);
        let r = q.norm();
        let p = q / r;
        (dq - p * p.dot(&dq)) / r
    }
}

/// Loop through tabulated points on the sphere, interpolated coordinate-wise
/// by periodic PCHIP in the cumulative chord length and projected back onto
/// the sphere.
#[derive(Debug, Clone)]
pub struct Tabulated {
    knots: Vec<f64>,
    period: f64,
    coords: [PeriodicPchip; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedParams {
    samples: Vec<[f64; 3]>,
}

impl Tabulated {
    pub fn new(samples: &[[f64; 3]]) -> Result<Self> {
        let mut pts: Vec<Vector3<f64>> = samples.iter().map(|p| Vector3::from(*p)).collect();
        for (i, p) in pts.iter().enumerate() {
            let r = p.norm();
            if !r.is_finite() || (r - 1.0).abs() > SPHERE_TOL {
                return Err(Error::precondition(format!(
                    "tabulated sample {i} has norm {r}, not on the unit sphere"
                )));
            }
        }
        if pts.len() >= 2 && (pts[0] - pts[pts.len() - 1]).norm() < 1e-14 {
            // closing point repeated
            pts.pop();
        }
        if pts.len() < 8 {
            return Err(Error::precondition(format!(
                "a tabulated loop needs at least 8 distinct samples, got {}",
                pts.len()
            )));
        }
        let n = pts.len();
        let mut knots = Vec::with_capacity(n);
        let mut t = 0.0;
        for i in 0..n {
            knots.push(t);
            let d = (pts[(i + 1) % n] - pts[i]).norm();
            if d == 0.0 {
                return Err(Error::precondition(format!(
                    "tabulated samples {i} and {} coincide",
                    (i + 1) % n
                )));
            }
            t += d;
        }
        let coord = |k: usize| {
            let y: Vec<f64> = pts.iter().map(|p| p[k]).collect();
            PeriodicPchip::new(&knots, &y, t)
        };
        Ok(Self {
            coords: [coord(0), coord(1), coord(2)],
            knots,
            period: t,
        })
    }

    fn raw(&self, u: f64) -> (Vector3<f64>, Vector3<f64>) {
        let [x, y, z] = [
            self.coords[0].eval(u),
            self.coords[1].eval(u),
            self.coords[2].eval(u),
        ];
        (Vector3::new(x.0, y.0, z.0), Vector3::new(x.1, y.1, z.1))
    }
}

impl CurveFamily for Tabulated {
    fn name(&self) -> &'static str {
        "tabulated"
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn point(&self, u: f64) -> Vector3<f64> {
        self.raw(u).0.normalize()
    }

    fn tangent(&self, u: f64) -> Vector3<f64> {
        let (q, dq) = self.raw(u);
        let r = q.norm();
        let p = q / r;
        (dq - p * p.dot(&dq)) / r
    }

    fn knots(&self) -> Vec<f64> {
        self.knots.clone()
    }
}

pub type CurveFactory = Box<dyn CurveFamily>;

/// Registry of the built-in curve families, keyed by `kind`.
pub fn curve_registry() -> &'static Registry<CurveFactory> {
    static REGISTRY: OnceLock<Registry<CurveFactory>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut r = Registry::new("curve family");
        r.register("latitude_circle", |v: &Value| {
            let p: LatitudeParams = parse_params("latitude_circle", v)?;
            check_theta(p.theta)?;
            Ok(Box::new(LatitudeCircle { theta: p.theta }) as CurveFactory)
        });
        r.register("perturbed_latitude", |v: &Value| {
            let p: PerturbedParams = parse_params("perturbed_latitude", v)?;
            check_theta(p.theta)?;
            if !(p.amplitude.is_finite() && p.amplitude >= 0.0 && p.amplitude < 0.5) {
                return Err(Error::config(
                    "amplitude",
                    format!(
                        "perturbation amplitude must lie in [0, 0.5), got {}",
                        p.amplitude
                    ),
                ));
            }
            if p.mode < 2 {
                return Err(Error::config(
                    "mode",
                    format!("perturbation mode must be at least 2, got {}", p.mode),
                ));
            }
            Ok(Box::new(PerturbedLatitude {
                theta: p.theta,
                amplitude: p.amplitude,
                mode: p.mode,
            }) as CurveFactory)
        });
        r.register("tabulated", |v: &Value| {
            let p: TabulatedParams = parse_params("tabulated", v)?;
            Ok(Box::new(Tabulated::new(&p.samples)?) as CurveFactory)
        });
        r
    })
}
