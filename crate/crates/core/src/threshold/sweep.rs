//! Truncation sweeps `L ↦ λⱼ(H_{L,D/N})` and Agmon-weighted ground states.
//!
//! All truncations of one sweep live on the same lattice `x = jh`: the
//! Dirichlet problem on `(−L, L)` uses the nodes `|j| < L/h`, the Neumann
//! problem the cells centred at `|j| ≤ L/h`. On a shared lattice the
//! bracketing `λ₁(N_L) ≤ ε₀ ≤ λ₁(D_L)` holds exactly for the lattice ground
//! energy `ε₀`, which is taken from a long Dirichlet reference truncation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{discretize, Potential, PotentialSpec};
use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::spectral1d::{lowest_eigenvalues_with, BoundaryKind, EigOptions, Grid1D};
use crate::stats::{kendall_tau, linear_fit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    /// Lattice spacing shared by every truncation.
    pub h: f64,
    /// Reference half-length for the lattice ground energy; `None` uses
    /// twice the largest `L`.
    pub l_ref: Option<f64>,
    /// Width of the boundary layer for tail norms.
    pub eta: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            h: 0.02,
            l_ref: None,
            eta: 1.0,
        }
    }
}

/// Fit of `gap(L) ≈ A·e^{−aL}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    /// Values of `L` that entered the fit.
    pub window: Vec<f64>,
    /// False when fewer than three points rose above the noise floor.
    pub fitted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationSweep {
    pub family: String,
    pub h: f64,
    /// Half-lengths actually used (multiples of `h`).
    #[serde(rename = "L_grid")]
    pub l_grid: Vec<f64>,
    pub lam1_n: Vec<f64>,
    pub lam1_d: Vec<f64>,
    pub lam2_n: Vec<f64>,
    pub lam2_d: Vec<f64>,
    /// Lattice ground energy from the reference truncation.
    pub eps0: f64,
    #[serde(rename = "L_ref")]
    pub l_ref: f64,
    /// Smallest `L` from which the bracketing holds for the rest of the sweep.
    #[serde(rename = "L_min")]
    pub l_min: Option<f64>,
    pub rate_n: RateFit,
    pub rate_d: RateFit,
    /// `min_L min(λ₂(D), λ₂(N)) − ε₀`.
    pub gap_delta: f64,
    /// Round-off level below which eigenvalue differences are not fitted.
    pub noise_floor: f64,
}

struct Lattice {
    h: f64,
}

impl Lattice {
    fn steps(&self, l: f64) -> usize {
        (l / self.h).round() as usize
    }

    fn dirichlet(&self, j: usize) -> Result<Grid1D> {
        let l = j as f64 * self.h;
        Grid1D::new(BoundaryKind::Dirichlet, -l, l, 2 * j - 1)
    }

    fn neumann(&self, j: usize) -> Result<Grid1D> {
        let l = (j as f64 + 0.5) * self.h;
        Grid1D::new(BoundaryKind::Neumann, -l, l, 2 * j + 1)
    }
}

fn check_grid(l_grid: &[f64], h: f64) -> Result<()> {
    if l_grid.len() < 5 {
        return Err(Error::precondition(format!(
            "a truncation sweep needs at least 5 values of L, got {}",
            l_grid.len()
        )));
    }
    if l_grid.windows(2).any(|w| !(w[1] > w[0])) || !(l_grid[0] > 0.0) {
        return Err(Error::precondition(
            "L values must be positive and ascending",
        ));
    }
    if !(h.is_finite() && h > 0.0 && l_grid[0] >= 8.0 * h) {
        return Err(Error::precondition(format!(
            "lattice spacing {h} too coarse for L = {}",
            l_grid[0]
        )));
    }
    Ok(())
}

fn values(potential: &dyn Potential, grid: &Grid1D, k: usize) -> Result<Vec<f64>> {
    let op = discretize(potential, grid)?;
    Ok(lowest_eigenvalues_with(&op, k, &EigOptions::values_only().with_tol(0.0))?.values)
}

fn lattice_ground_energy(potential: &dyn Potential, lattice: &Lattice, l_ref: f64) -> Result<f64> {
    Ok(values(potential, &lattice.dirichlet(lattice.steps(l_ref))?, 1)?[0])
}

fn noise_floor(potential: &dyn Potential, lattice: &Lattice, l: f64) -> f64 {
    let vmax = [0.0, 0.5 * l, l]
        .iter()
        .map(|x| potential.value(*x).abs())
        .fold(0.0, f64::max);
    100.0 * f64::EPSILON * (4.0 / (lattice.h * lattice.h) + vmax)
}

/// Semilog regression of the positive entries of `gaps` above `floor`.
pub fn fit_rate(l: &[f64], gaps: &[f64], floor: f64) -> RateFit {
    let (xs, ys): (Vec<f64>, Vec<f64>) = l
        .iter()
        .zip(gaps)
        .filter(|(_, g)| **g > floor)
        .map(|(x, g)| (*x, g.ln()))
        .unzip();
    match linear_fit(&xs, &ys) {
        Some(fit) if xs.len() >= 3 => RateFit {
            rate: -fit.slope,
            amplitude: fit.intercept.exp(),
            r_squared: fit.r_squared,
            window: xs,
            fitted: true,
        },
        _ => RateFit {
            rate: f64::NAN,
            amplitude: f64::NAN,
            r_squared: f64::NAN,
            window: xs,
            fitted: false,
        },
    }
}

pub fn truncation_sweep(
    spec: &PotentialSpec,
    l_grid: &[f64],
    opts: &SweepOptions,
) -> Result<TruncationSweep> {
    let potential = spec.build()?;
    let potential = potential.as_ref();
    if potential.hard_wall().is_some() {
        return Err(Error::precondition(
            "hard walls fix the transverse domain; there is nothing to truncate",
        ));
    }
    check_grid(l_grid, opts.h)?;
    let lattice = Lattice { h: opts.h };
    let l_max = *l_grid.last().unwrap();
    let l_ref = opts.l_ref.unwrap_or(2.0 * l_max).max(l_max);
    let eps0 = lattice_ground_energy(potential, &lattice, l_ref)?;

    let rows: Vec<Result<(f64, [f64; 4])>> = l_grid
        .par_iter()
        .map(|&l| {
            let j = lattice.steps(l);
            let d = values(potential, &lattice.dirichlet(j)?, 2)?;
            let n = values(potential, &lattice.neumann(j)?, 2)?;
            Ok((j as f64 * lattice.h, [n[0], d[0], n[1], d[1]]))
        })
        .collect();
    let mut ls = Vec::new();
    let mut cols: [Vec<f64>; 4] = Default::default();
    for row in rows {
        let (l, vals) = row?;
        ls.push(l);
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    let [lam1_n, lam1_d, lam2_n, lam2_d] = cols;

    let holds: Vec<bool> = lam1_n
        .iter()
        .zip(&lam1_d)
        .map(|(n, d)| *n <= eps0 && eps0 <= *d)
        .collect();
    let l_min = (0..ls.len())
        .find(|&i| holds[i..].iter().all(|h| *h))
        .map(|i| ls[i]);

    let floor = noise_floor(potential, &lattice, l_max);
    let gap_n: Vec<f64> = lam1_n.iter().map(|v| eps0 - v).collect();
    let gap_d: Vec<f64> = lam1_d.iter().map(|v| v - eps0).collect();
    let gap_delta = lam2_n
        .iter()
        .zip(&lam2_d)
        .map(|(n, d)| n.min(*d) - eps0)
        .fold(f64::INFINITY, f64::min);
    Ok(TruncationSweep {
        family: potential.name().to_string(),
        h: opts.h,
        rate_n: fit_rate(&ls, &gap_n, floor),
        rate_d: fit_rate(&ls, &gap_d, floor),
        l_grid: ls,
        lam1_n,
        lam1_d,
        lam2_n,
        lam2_d,
        eps0,
        l_ref,
        l_min,
        gap_delta,
        noise_floor: floor,
    })
}

/// `Φ(x) = ∫_R^{|x|} √(v(t) − ε₀) dt` at the given points (zero for
/// `|x| ≤ R`), by cumulative trapezoid on the sorted `|x|` values with
/// eight substeps per interval.
pub fn agmon_weight(potential: &dyn Potential, eps0: f64, r: f64, xs: &[f64]) -> Result<Vec<f64>> {
    if !(r >= 0.0) {
        return Err(Error::precondition(format!(
            "onset radius must be nonnegative, got {r}"
        )));
    }
    let mut ts: Vec<f64> = xs.iter().map(|x| x.abs()).filter(|t| *t > r).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let bad: Vec<f64> = ts
        .iter()
        .copied()
        .filter(|t| !(potential.value(*t) > eps0))
        .collect();
    if let (Some(lo), Some(hi)) = (bad.first(), bad.last()) {
        return Err(Error::precondition(format!(
            "v ≤ ε₀ = {eps0} for {lo} ≤ |x| ≤ {hi}, beyond the onset radius {r}"
        )));
    }
    let integrand = |t: f64| (potential.value(t) - eps0).max(0.0).sqrt();
    const SUB: usize = 8;
    let mut phi_at = Vec::with_capacity(ts.len());
    let mut acc = 0.0;
    let mut prev = r;
    for &t in &ts {
        let step = (t - prev) / SUB as f64;
        let mut piece = 0.5 * (integrand(prev) + integrand(t));
        for k in 1..SUB {
            piece += integrand(prev + k as f64 * step);
        }
        acc += piece * step;
        phi_at.push(acc);
        prev = t;
    }
    Ok(xs
        .iter()
        .map(|x| {
            let t = x.abs();
            if t <= r {
                0.0
            } else {
                let i = ts.partition_point(|s| *s < t);
                phi_at[i]
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgmonReport {
    pub theta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "L_grid")]
    pub l_grid: Vec<f64>,
    pub eps0: f64,
    /// `∫ e^{2θΦ} φ²` of the Neumann ground state per `L`.
    pub weighted_norms: Vec<f64>,
    pub bound_estimate: f64,
    /// `max/min − 1` over the sweep.
    pub variation: f64,
    /// Kendall rank correlation of the weighted norms with `L`.
    pub kendall_tau: f64,
    pub eta: f64,
    /// `‖φ‖` over `L − η < |x| < L` per `L`.
    pub tail_norms: Vec<f64>,
    pub tail_fit: RateFit,
    /// `Φ` on the lattice of the largest truncation.
    #[serde(rename = "Phi_x")]
    pub phi_x: Vec<f64>,
    #[serde(rename = "Phi_samples")]
    pub phi_samples: Vec<f64>,
}

pub fn agmon_norms(
    spec: &PotentialSpec,
    theta: f64,
    r: f64,
    l_grid: &[f64],
    opts: &SweepOptions,
) -> Result<AgmonReport> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::precondition(format!(
            "θ must lie in [0, 1), got {theta}"
        )));
    }
    let potential = spec.build()?;
    let potential = potential.as_ref();
    if potential.hard_wall().is_some() {
        return Err(Error::precondition(
            "hard walls fix the transverse domain; there is nothing to truncate",
        ));
    }
    check_grid(l_grid, opts.h)?;
    let lattice = Lattice { h: opts.h };
    let l_max = *l_grid.last().unwrap();
    let eps0 = lattice_ground_energy(
        potential,
        &lattice,
        opts.l_ref.unwrap_or(2.0 * l_max).max(l_max),
    )?;
    let eta = opts.eta;
    let rows: Vec<Result<(f64, f64, f64, Vec<f64>, Vec<f64>)>> = l_grid
        .par_iter()
        .map(|&l| {
            let j = lattice.steps(l);
            let grid = lattice.neumann(j)?;
            let op = discretize(potential, &grid)?;
            let eig_opts = EigOptions {
                tol: 0.0,
                vectors: true,
                richardson: false,
            };
            let eig = lowest_eigenvalues_with(&op, 1, &eig_opts)?;
            let phi = &eig.vectors.as_ref().expect("vectors requested")[0];
            let xs = grid.points();
            let weight = agmon_weight(potential, eps0, r, &xs)?;
            let h = grid.h;
            let weighted: f64 = phi
                .iter()
                .zip(&weight)
                .map(|(p, w)| (2.0 * theta * w).exp() * p * p)
                .sum::<f64>()
                * h;
            let l_eff = j as f64 * lattice.h;
            let tail: f64 = (phi
                .iter()
                .zip(&xs)
                .filter(|(_, x)| x.abs() > l_eff - eta)
                .map(|(p, _)| p * p)
                .sum::<f64>()
                * h)
                .sqrt();
            Ok((l_eff, weighted, tail, xs, weight))
        })
        .collect();
    let mut ls = Vec::new();
    let mut weighted = Vec::new();
    let mut tails = Vec::new();
    let mut phi_x = Vec::new();
    let mut phi_samples = Vec::new();
    for row in rows {
        let (l, w, t, xs, phi) = row?;
        ls.push(l);
        weighted.push(w);
        tails.push(t);
        phi_x = xs;
        phi_samples = phi;
    }
    let max = weighted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = weighted.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(AgmonReport {
        theta,
        r,
        eps0,
        kendall_tau: kendall_tau(&ls, &weighted),
        bound_estimate: max,
        variation: max / min - 1.0,
        weighted_norms: weighted,
        eta: opts.eta,
        tail_fit: fit_rate(&ls, &tails, 0.0),
        tail_norms: tails,
        l_grid: ls,
        phi_x,
        phi_samples,
    })
}

/// Writes `L,lam1_N,lam1_D,lam2_N,lam2_D,agmon_norm,tail_norm`; the last two
/// columns are empty without an Agmon report.
pub fn write_sweep_csv(
    sweep: &TruncationSweep,
    agmon: Option<&AgmonReport>,
    mut out: impl Write,
) -> Result<()> {
    if let Some(a) = agmon {
        if a.l_grid != sweep.l_grid {
            return Err(Error::precondition(
                "Agmon report and sweep use different L grids",
            ));
        }
    }
    writeln!(out, "L,lam1_N,lam1_D,lam2_N,lam2_D,agmon_norm,tail_norm")?;
    for i in 0..sweep.l_grid.len() {
        let (w, t) = match agmon {
            Some(a) => (fmt_real(a.weighted_norms[i]), fmt_real(a.tail_norms[i])),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{w},{t}",
            fmt_real(sweep.l_grid[i]),
            fmt_real(sweep.lam1_n[i]),
            fmt_real(sweep.lam1_d[i]),
            fmt_real(sweep.lam2_n[i]),
            fmt_real(sweep.lam2_d[i]),
        )?;
    }
    Ok(())
}
