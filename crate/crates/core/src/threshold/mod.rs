//! The transverse line operator `Q = −d²/dx² + v`: its ground-state energy
//! `ε₀`, truncation studies on `(−L, L)` and Agmon-weighted norms.

mod potentials;
mod sweep;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use potentials::{
    potential_registry, Confining, DeltaApprox, GaussianWell, HardWall, Potential,
    PotentialFactory, SquareWell, TabulatedPotential,
};
pub use sweep::{
    agmon_norms, agmon_weight, truncation_sweep, write_sweep_csv, AgmonReport, RateFit,
    SweepOptions, TruncationSweep,
};

use crate::error::{Error, Result};
use crate::spectral1d::{
    assemble, lowest_eigenvalues_against, lowest_eigenvalues_with, BoundaryKind, EigOptions,
    Grid1D, Operator1D,
};

pub const MIN_POINTS: usize = 512;

/// Declarative potential description, stored flat
/// (`{"family": "square_well", "depth": 4, "a": 1}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: String,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl PotentialSpec {
    pub fn new(family: &str, params: Value) -> Self {
        let params = match params {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        Self {
            family: family.to_string(),
            params,
        }
    }

    pub fn square_well(depth: f64, a: f64) -> Self {
        Self::new("square_well", serde_json::json!({ "depth": depth, "a": a }))
    }

    pub fn hard_wall(a: f64) -> Self {
        Self::new("hard_wall", serde_json::json!({ "a": a }))
    }

    pub fn delta_approx(alpha: f64, w_reg: f64) -> Self {
        Self::new(
            "delta_approx",
            serde_json::json!({ "alpha": alpha, "w_reg": w_reg }),
        )
    }

    pub fn confining(p: f64) -> Self {
        Self::new("confining", serde_json::json!({ "p": p }))
    }

    pub fn build(&self) -> Result<PotentialFactory> {
        potential_registry().build(&self.family, &Value::Object(self.params.clone()))
    }
}

/// Operator on `grid` with the potential averaged over each control cell.
pub fn discretize(potential: &dyn Potential, grid: &Grid1D) -> Result<Operator1D> {
    let samples: Vec<f64> = (0..grid.n)
        .map(|i| {
            let (lo, hi) = grid.cell(i);
            potential.cell_average(lo, hi)
        })
        .collect();
    assemble(&samples, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub family: String,
    /// Richardson-extrapolated ground-state energy of the Dirichlet truncation.
    pub eps0: f64,
    /// Magnitude of the Richardson correction applied to `eps0`.
    pub eps0_error: f64,
    /// Second extrapolated Dirichlet eigenvalue.
    pub lambda2: f64,
    pub gap: f64,
    #[serde(with = "crate::io::extended_real")]
    pub v_inf: f64,
    /// `[λ₁(Neumann), λ₁(Dirichlet)]` on the same interval and resolution;
    /// absent for hard walls, whose domain is exact.
    pub enclosure: Option<[f64; 2]>,
    #[serde(rename = "L_used")]
    pub l_used: f64,
    pub n_used: usize,
    pub h: f64,
    pub satisfied_iii: bool,
}

/// `ε₀` from the Dirichlet truncation to `(−L, L)` with `n` interior nodes
/// (rounded up to odd), Richardson-corrected against the nested half grid.
pub fn compute_threshold(spec: &PotentialSpec, l: f64, n: usize) -> Result<ThresholdReport> {
    let potential = spec.build()?;
    threshold_for(potential.as_ref(), l, n)
}

pub fn threshold_for(potential: &dyn Potential, l: f64, n: usize) -> Result<ThresholdReport> {
    if n < MIN_POINTS {
        return Err(Error::precondition(format!(
            "threshold solve needs n ≥ {MIN_POINTS}, got {n}"
        )));
    }
    let wall = potential.hard_wall();
    let half = match wall {
        Some(a) => a,
        None => {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::precondition(format!(
                    "truncation L must be positive, got {l}"
                )));
            }
            l
        }
    };
    let n = n | 1;
    let grid = Grid1D::new(BoundaryKind::Dirichlet, -half, half, n)?;
    let coarse_grid = Grid1D::new(BoundaryKind::Dirichlet, -half, half, (n - 1) / 2)?;
    let op = discretize(potential, &grid)?;
    let coarse = discretize(potential, &coarse_grid)?;
    let opts = EigOptions {
        tol: 0.0,
        vectors: false,
        richardson: true,
    };
    let eig = lowest_eigenvalues_against(&op, &coarse, 2, &opts)?;
    let ext = eig.extrapolated();
    let corrections = eig.richardson_error.clone().unwrap_or_default();
    let (eps0, lambda2) = (ext[0], ext[1]);
    let gap = lambda2 - eps0;
    let gap_tol =
        100.0 * (corrections[0].abs() + corrections[1].abs()) + 1e-8 * eps0.abs().max(1.0);
    if !(gap > gap_tol) {
        return Err(Error::precondition(format!(
            "ground state not isolated at this resolution: gap {gap:e} ≤ {gap_tol:e}"
        )));
    }
    if wall.is_none() {
        for x in [-half, half] {
            let v = potential.value(x);
            if !(v > eps0) {
                return Err(Error::precondition(format!(
                    "truncation too short: v({x}) = {v} does not exceed ε₀ = {eps0}"
                )));
            }
        }
    }
    let v_inf = potential.v_inf();
    let satisfied_iii = eps0 < v_inf;
    if !satisfied_iii {
        return Err(Error::precondition(format!(
            "ε₀ = {eps0} is not below v_∞ = {v_inf}"
        )));
    }
    let enclosure = if wall.is_none() {
        let ngrid = Grid1D::new(BoundaryKind::Neumann, -half, half, n)?;
        let nop = discretize(potential, &ngrid)?;
        let lam_n = lowest_eigenvalues_with(&nop, 1, &EigOptions::values_only().with_tol(0.0))?;
        Some([lam_n.values[0], eig.values[0]])
    } else {
        None
    };
    Ok(ThresholdReport {
        family: potential.name().to_string(),
        eps0,
        eps0_error: corrections[0].abs(),
        lambda2,
        gap,
        v_inf,
        enclosure,
        l_used: half,
        n_used: n,
        h: grid.h,
        satisfied_iii,
    })
}
