//! Even transverse potentials `v`, bounded below.

use std::sync::OnceLock;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::registry::{parse_params, Registry};

pub trait Potential: Send + Sync {
    fn name(&self) -> &'static str;

    /// `v(x)`; implementations are even in `x`.
    fn value(&self, x: f64) -> f64;

    /// Nonnegative abscissae where `v` jumps (mirrored to `−x` by callers).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `liminf_{|x|→∞} v(x)`, possibly `+∞`.
    fn v_inf(&self) -> f64;

    /// Half width `a` when the transverse domain is `(−a, a)` with Dirichlet
    /// ends instead of the whole line.
    fn hard_wall(&self) -> Option<f64> {
        None
    }

    /// Mean of `v` over `[lo, hi]`, splitting the quadrature at jumps.
    fn cell_average(&self, lo: f64, hi: f64) -> f64 {
        let rule = rule();
        let mut cuts = vec![lo];
        for b in self.breakpoints() {
            for c in [-b, b] {
                if c > lo && c < hi {
                    cuts.push(c);
                }
            }
        }
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let total: f64 = cuts
            .windows(2)
            .map(|w| rule.integrate(w[0], w[1], |x| self.value(x)))
            .sum();
        total / (hi - lo)
    }
}

fn rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(8))
}

fn positive(name: &str, field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(
            format!("{name}.{field}"),
            format!("must be a positive finite number, got {v}"),
        ))
    }
}

/// `−depth` on `|x| < a`, zero outside.
#[derive(Debug, Clone, Copy)]
pub struct SquareWell {
    pub depth: f64,
    pub a: f64,
}

impl Potential for SquareWell {
    fn name(&self) -> &'static str {
        "square_well"
    }
    fn value(&self, x: f64) -> f64 {
        if x.abs() < self.a {
            -self.depth
        } else {
            0.0
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.a]
    }
    fn v_inf(&self) -> f64 {
        0.0
    }
}

/// `−depth·exp(−x²/width²)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianWell {
    pub depth: f64,
    pub width: f64,
}

impl Potential for GaussianWell {
    fn name(&self) -> &'static str {
        "gaussian_well"
    }
    fn value(&self, x: f64) -> f64 {
        -self.depth * (-(x / self.width).powi(2)).exp()
    }
    fn v_inf(&self) -> f64 {
        0.0
    }
}

/// `|x|^p`, `p ≥ 1`.
#[derive(Debug, Clone, Copy)]
pub struct Confining {
    pub p: f64,
}

impl Potential for Confining {
    fn name(&self) -> &'static str {
        "confining"
    }
    fn value(&self, x: f64) -> f64 {
        x.abs().powf(self.p)
    }
    fn v_inf(&self) -> f64 {
        f64::INFINITY
    }
}

/// Free motion between walls at `±a`. Without a penalty the walls are
/// Dirichlet ends of the domain; with one, `v = penalty` for `|x| > a`.
#[derive(Debug, Clone, Copy)]
pub struct HardWall {
    pub a: f64,
    pub penalty: Option<f64>,
}

impl Potential for HardWall {
    fn name(&self) -> &'static str {
        "hard_wall"
    }
    fn value(&self, x: f64) -> f64 {
        match self.penalty {
            Some(p) if x.abs() > self.a => p,
            _ => 0.0,
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.a]
    }
    fn v_inf(&self) -> f64 {
        self.penalty.unwrap_or(f64::INFINITY)
    }
    fn hard_wall(&self) -> Option<f64> {
        match self.penalty {
            Some(_) => None,
            None => Some(self.a),
        }
    }
}

/// Regularized attractive point interaction of strength `alpha`:
/// `−(alpha/w_reg)` on `|x| < w_reg/2`, so the well has total weight
/// `−alpha` over a support of width `w_reg`.
#[derive(Debug, Clone, Copy)]
pub struct DeltaApprox {
    pub alpha: f64,
    pub w_reg: f64,
}

impl Potential for DeltaApprox {
    fn name(&self) -> &'static str {
        "delta_approx"
    }
    fn value(&self, x: f64) -> f64 {
        if x.abs() < 0.5 * self.w_reg {
            -self.alpha / self.w_reg
        } else {
            0.0
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.5 * self.w_reg]
    }
    fn v_inf(&self) -> f64 {
        0.0
    }
}

/// Piecewise-linear table extended by its end values. A table on `x ≥ 0`
/// is the profile `g(|x|)`; otherwise it is symmetrized as
/// `(g(x) + g(−x))/2`.
#[derive(Debug, Clone)]
pub struct TabulatedPotential {
    x: Vec<f64>,
    v: Vec<f64>,
    v_inf: f64,
}

impl TabulatedPotential {
    /// Fraction of the table range treated as the tail for `v_inf`.
    pub const TAIL_FRACTION: f64 = 0.1;

    pub fn new(x: &[f64], v: &[f64]) -> Result<Self> {
        if x.len() != v.len() || x.len() < 2 {
            return Err(Error::config(
                "tabulated",
                "`x` and `v` must have the same length, at least 2",
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(v).any(|t| !t.is_finite()) {
            return Err(Error::config(
                "tabulated.x",
                "abscissae must be finite and strictly increasing",
            ));
        }
        let mut t = Self {
            x: x.to_vec(),
            v: v.to_vec(),
            v_inf: 0.0,
        };
        let reach = x[0].abs().max(x[x.len() - 1].abs());
        let cut = (1.0 - Self::TAIL_FRACTION) * reach;
        t.v_inf = x
            .iter()
            .filter(|xi| xi.abs() >= cut)
            .map(|&xi| t.value(xi))
            .fold(f64::INFINITY, f64::min);
        Ok(t)
    }

    fn raw(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.v[0];
        }
        if x >= self.x[n - 1] {
            return self.v[n - 1];
        }
        let i = self.x.partition_point(|&p| p <= x) - 1;
        let f = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.v[i] * (1.0 - f) + self.v[i + 1] * f
    }
}

impl Potential for TabulatedPotential {
    fn name(&self) -> &'static str {
        "tabulated"
    }
    fn value(&self, x: f64) -> f64 {
        if self.x[0] >= 0.0 {
            self.raw(x.abs())
        } else {
            0.5 * (self.raw(x) + self.raw(-x))
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.x.iter().map(|x| x.abs()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
    fn v_inf(&self) -> f64 {
        self.v_inf
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WellParams {
    depth: f64,
    a: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianParams {
    depth: f64,
    width: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfiningParams {
    p: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HardWallParams {
    a: f64,
    #[serde(default)]
    penalty: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaParams {
    alpha: f64,
    w_reg: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableParams {
    x: Vec<f64>,
    v: Vec<f64>,
}

pub type PotentialFactory = Box<dyn Potential>;

/// Registry of the built-in potential families, keyed by `family`.
pub fn potential_registry() -> &'static Registry<PotentialFactory> {
    static REGISTRY: OnceLock<Registry<PotentialFactory>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut r = Registry::new("potential family");
        r.register("square_well", |v: &Value| {
            let p: WellParams = parse_params("square_well", v)?;
            Ok(Box::new(SquareWell {
                depth: positive("square_well", "depth", p.depth)?,
                a: positive("square_well", "a", p.a)?,
            }) as PotentialFactory)
        });
        r.register("gaussian_well", |v: &Value| {
            let p: GaussianParams = parse_params("gaussian_well", v)?;
            Ok(Box::new(GaussianWell {
                depth: positive("gaussian_well", "depth", p.depth)?,
                width: positive("gaussian_well", "width", p.width)?,
            }) as PotentialFactory)
        });
        r.register("confining", |v: &Value| {
            let p: ConfiningParams = parse_params("confining", v)?;
            if !(p.p.is_finite() && p.p >= 1.0) {
                return Err(Error::config(
                    "confining.p",
                    format!("need p ≥ 1, got {}", p.p),
                ));
            }
            Ok(Box::new(Confining { p: p.p }) as PotentialFactory)
        });
        r.register("hard_wall", |v: &Value| {
            let p: HardWallParams = parse_params("hard_wall", v)?;
            let penalty = p
                .penalty
                .map(|x| positive("hard_wall", "penalty", x))
                .transpose()?;
            Ok(Box::new(HardWall {
                a: positive("hard_wall", "a", p.a)?,
                penalty,
            }) as PotentialFactory)
        });
        r.register("delta_approx", |v: &Value| {
            let p: DeltaParams = parse_params("delta_approx", v)?;
            Ok(Box::new(DeltaApprox {
                alpha: positive("delta_approx", "alpha", p.alpha)?,
                w_reg: positive("delta_approx", "w_reg", p.w_reg)?,
            }) as PotentialFactory)
        });
        r.register("tabulated", |v: &Value| {
            let p: TableParams = parse_params("tabulated", v)?;
            Ok(Box::new(TabulatedPotential::new(&p.x, &p.v)?) as PotentialFactory)
        });
        r
    })
}
