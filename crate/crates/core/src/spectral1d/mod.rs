//! Finite-difference Schrödinger operators `−d²/dx² + V` in one dimension.
//!
//! Three closures are supported:
//!
//! * **Dirichlet** on `(a, b)`: `n` interior nodes `a + (i+1)h`, `h = (b−a)/(n+1)`.
//! * **Neumann** on `(a, b)`: `n` cell centres `a + (i+½)h`, `h = (b−a)/n`, closed
//!   by reflection across the end faces (ghost value equal to the boundary
//!   cell), which keeps the matrix exactly symmetric.
//! * **Periodic** on a circle of length `b − a`: `n` nodes `a + ih`, `h = (b−a)/n`,
//!   with corner couplings.
//!
//! Eigenvalues are located by bisection on LDLᵀ inertia counts and
//! eigenvectors by inverse iteration. Counting below a level never forms
//! the spectrum.

pub mod banded;
pub mod oscillation;
pub mod reduce;
pub mod sturm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use oscillation::{oscillation_count, prufer_phase, EndCondition, PhaseOptions, PhaseProblem};

/// Relative shift applied to counting levels so that "≤ level" is decided
/// deterministically when the level coincides with an eigenvalue.
pub const COUNT_SHIFT: f64 = 1e-12;

/// Default absolute bisection tolerance.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

pub const MAX_INVERSE_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub h: f64,
    pub kind: BoundaryKind,
}

impl Grid1D {
    pub const MIN_POINTS: usize = 16;

    pub fn new(kind: BoundaryKind, a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::precondition(format!(
                "grid interval must satisfy a < b, got ({a}, {b})"
            )));
        }
        if n < Self::MIN_POINTS {
            return Err(Error::precondition(format!(
                "grid needs at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        let h = match kind {
            BoundaryKind::Dirichlet => (b - a) / (n + 1) as f64,
            BoundaryKind::Neumann | BoundaryKind::Periodic => (b - a) / n as f64,
        };
        Ok(Self { a, b, n, h, kind })
    }

    /// Grid with spacing as close as possible to `h` (never coarser).
    pub fn with_spacing(kind: BoundaryKind, a: f64, b: f64, h: f64) -> Result<Self> {
        let cells = ((b - a) / h).ceil().max(1.0) as usize;
        let n = match kind {
            BoundaryKind::Dirichlet => cells.saturating_sub(1),
            _ => cells,
        };
        Self::new(kind, a, b, n.max(Self::MIN_POINTS))
    }

    pub fn point(&self, i: usize) -> f64 {
        match self.kind {
            BoundaryKind::Dirichlet => self.a + (i + 1) as f64 * self.h,
            BoundaryKind::Neumann => self.a + (i as f64 + 0.5) * self.h,
            BoundaryKind::Periodic => self.a + i as f64 * self.h,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Control cell `[x − h/2, x + h/2]` attached to grid point `i`.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        let x = self.point(i);
        (x - 0.5 * self.h, x + 0.5 * self.h)
    }

    /// Point samples of `f` at the grid points.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.point(i))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operator1D {
    pub kind: BoundaryKind,
    pub grid: Grid1D,
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    /// Coupling between the first and last unknowns (periodic only).
    pub corner: f64,
    pub potential_samples: Vec<f64>,
}

/// Assembles the second-difference operator with the given potential
/// samples (one per grid point).
pub fn assemble(potential_samples: &[f64], grid: &Grid1D) -> Result<Operator1D> {
    let n = grid.n;
    if potential_samples.len() != n {
        return Err(Error::precondition(format!(
            "expected {n} potential samples, got {}",
            potential_samples.len()
        )));
    }
    if let Some(i) = potential_samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::precondition(format!(
            "non-finite potential sample {} at x = {}",
            potential_samples[i],
            grid.point(i)
        )));
    }
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let mut diag: Vec<f64> = potential_samples.iter().map(|v| 2.0 * inv_h2 + v).collect();
    if grid.kind == BoundaryKind::Neumann {
        diag[0] -= inv_h2;
        diag[n - 1] -= inv_h2;
    }
    let corner = if grid.kind == BoundaryKind::Periodic {
        -inv_h2
    } else {
        0.0
    };
    Ok(Operator1D {
        kind: grid.kind,
        grid: grid.clone(),
        diag,
        offdiag: vec![-inv_h2; n - 1],
        corner,
        potential_samples: potential_samples.to_vec(),
    })
}

impl Operator1D {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `shift` (no tie handling).
    pub fn inertia_below(&self, shift: f64) -> usize {
        let (d, e) = self.sturm_form();
        sturm::negative_count(&d, &e, 0.0, shift)
    }

    /// Tridiagonal matrix with the same spectrum. Periodic operators are
    /// reduced orthogonally; the others are returned as is.
    pub fn sturm_form(&self) -> (Vec<f64>, Vec<f64>) {
        reduce::cyclic_to_tridiagonal(&self.diag, &self.offdiag, self.corner)
    }

    /// Max-row-sum norm, used for round-off estimates.
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut r = self.diag[i].abs();
                if i > 0 {
                    r += self.offdiag[i - 1].abs();
                }
                if i + 1 < n {
                    r += self.offdiag[i].abs();
                }
                if i == 0 || i == n - 1 {
                    r += self.corner.abs();
                }
                r
            })
            .fold(0.0, f64::max)
    }

    /// Same problem on a grid of (roughly) half the resolution. Nested
    /// layouts (odd Dirichlet, even periodic) keep every other sample;
    /// even Neumann grids average the two fine cells of each coarse cell;
    /// anything else is interpolated linearly. Callers that can resample the
    /// potential themselves should use [`lowest_eigenvalues_against`].
    pub fn coarsened(&self) -> Result<Operator1D> {
        let g = &self.grid;
        let v = &self.potential_samples;
        let n = g.n;
        let (coarse, samples): (Grid1D, Vec<f64>) = match g.kind {
            BoundaryKind::Dirichlet if n % 2 == 1 => {
                // coarse node j sits on fine node 2j+1
                let nc = (n - 1) / 2;
                (
                    Grid1D::new(g.kind, g.a, g.b, nc)?,
                    (0..nc).map(|j| v[2 * j + 1]).collect(),
                )
            }
            BoundaryKind::Neumann if n.is_multiple_of(2) => {
                let s = (0..n / 2)
                    .map(|j| 0.5 * (v[2 * j] + v[2 * j + 1]))
                    .collect();
                (Grid1D::new(g.kind, g.a, g.b, n / 2)?, s)
            }
            BoundaryKind::Periodic if n.is_multiple_of(2) => (
                Grid1D::new(g.kind, g.a, g.b, n / 2)?,
                (0..n / 2).map(|j| v[2 * j]).collect(),
            ),
            _ => {
                let grid = Grid1D::new(g.kind, g.a, g.b, n / 2)?;
                let xs = g.points();
                let s = grid
                    .points()
                    .iter()
                    .map(|&x| {
                        interpolate_linear(&xs, v, x, g.kind == BoundaryKind::Periodic, g.b - g.a)
                    })
                    .collect();
                (grid, s)
            }
        };
        assemble(&samples, &coarse)
    }
}

fn interpolate_linear(xs: &[f64], ys: &[f64], x: f64, periodic: bool, period: f64) -> f64 {
    let n = xs.len();
    if periodic {
        let h = period / n as f64;
        let t = ((x - xs[0]) / h).rem_euclid(n as f64);
        let i = (t.floor() as usize) % n;
        let f = t - t.floor();
        return ys[i] * (1.0 - f) + ys[(i + 1) % n] * f;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&p| p <= x).saturating_sub(1).min(n - 2);
    let f = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] * (1.0 - f) + ys[i + 1] * f
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigResult {
    /// Ascending eigenvalues, repeated according to multiplicity.
    pub values: Vec<f64>,
    /// Eigenvectors sampled on the grid, normalized so that `h·Σ vᵢ² = 1`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vectors: Option<Vec<Vec<f64>>>,
    pub kind: BoundaryKind,
    pub grid: Grid1D,
    /// Signed second-order correction per value: `values[j] + err[j]` is the
    /// Richardson-extrapolated estimate and `|err[j]|` the error estimate.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub richardson_error: Option<Vec<f64>>,
}

impl EigResult {
    /// Richardson-extrapolated values, or the raw values without an estimate.
    pub fn extrapolated(&self) -> Vec<f64> {
        match &self.richardson_error {
            Some(err) => self.values.iter().zip(err).map(|(v, e)| v + e).collect(),
            None => self.values.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    /// Absolute bisection tolerance; `0.0` bisects to machine precision.
    pub tol: f64,
    pub vectors: bool,
    pub richardson: bool,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_EIG_TOL,
            vectors: true,
            richardson: true,
        }
    }
}

impl EigOptions {
    pub fn values_only() -> Self {
        Self {
            vectors: false,
            richardson: false,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// The `k` smallest eigenvalues with eigenvectors and a Richardson error
/// estimate from the half-resolution problem.
pub fn lowest_eigenvalues(op: &Operator1D, k: usize) -> Result<EigResult> {
    lowest_eigenvalues_with(op, k, &EigOptions::default())
}

pub fn lowest_eigenvalues_with(op: &Operator1D, k: usize, opts: &EigOptions) -> Result<EigResult> {
    let coarse = if opts.richardson {
        Some(op.coarsened()?)
    } else {
        None
    };
    solve(op, coarse.as_ref(), k, opts)
}

/// As [`lowest_eigenvalues_with`], with the Richardson estimate taken
/// against a caller-supplied coarse discretization of the same problem.
pub fn lowest_eigenvalues_against(
    op: &Operator1D,
    coarse: &Operator1D,
    k: usize,
    opts: &EigOptions,
) -> Result<EigResult> {
    solve(op, Some(coarse), k, opts)
}

fn solve(
    op: &Operator1D,
    coarse: Option<&Operator1D>,
    k: usize,
    opts: &EigOptions,
) -> Result<EigResult> {
    let values = bisect_lowest(op, k, opts.tol)?;
    let vectors = if opts.vectors {
        Some(inverse_iteration(op, &values, opts.tol)?)
    } else {
        None
    };
    let richardson_error = if let Some(coarse) = coarse {
        let coarse_values = bisect_lowest(coarse, k, opts.tol)?;
        let ratio = coarse.grid.h / op.grid.h;
        let denom = ratio * ratio - 1.0;
        Some(
            values
                .iter()
                .zip(&coarse_values)
                .map(|(f, c)| (f - c) / denom)
                .collect(),
        )
    } else {
        None
    };
    Ok(EigResult {
        values,
        vectors,
        kind: op.kind,
        grid: op.grid.clone(),
        richardson_error,
    })
}

fn bisect_lowest(op: &Operator1D, k: usize, tol: f64) -> Result<Vec<f64>> {
    let n = op.len();
    if k > n {
        return Err(Error::precondition(format!(
            "requested {k} eigenvalues from an operator of size {n}"
        )));
    }
    let (d, e) = op.sturm_form();
    let (lo0, hi0) = sturm::gershgorin(&d, &e, 0.0);
    let mut values = Vec::with_capacity(k);
    let mut lo = lo0;
    for j in 0..k {
        match sturm::bisect(&d, &e, 0.0, j, lo, hi0, tol) {
            Ok(b) => {
                values.push(b.mid());
                // the next eigenvalue is not below this bracket's lower end
                lo = b.lo;
            }
            Err(b) => {
                return Err(Error::non_convergence(format!(
                    "bisection for eigenvalue #{} stalled after {} steps in [{:e}, {:e}] (width {:e}, tol {:e})",
                    j + 1,
                    b.iterations,
                    b.lo,
                    b.hi,
                    b.hi - b.lo,
                    tol
                )))
            }
        }
    }
    Ok(values)
}

/// Inverse iteration with re-orthogonalization inside clusters of
/// (nearly) equal eigenvalues.
fn inverse_iteration(op: &Operator1D, values: &[f64], tol: f64) -> Result<Vec<Vec<f64>>> {
    let n = op.len();
    let h = op.grid.h;
    let scale = op.norm_inf().max(1.0);
    let cluster_gap = 1e-7 * scale;
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut work = vec![0.0; n];
    for (j, &lambda) in values.iter().enumerate() {
        let cluster_start = (0..j)
            .rev()
            .take_while(|&i| (values[i] - lambda).abs() <= cluster_gap)
            .last()
            .unwrap_or(j);
        // perturb the shift away from the eigenvalue so the factor is usable
        let shift = lambda - tol - 4.0 * f64::EPSILON * scale;
        let factor = banded::BandLu::shifted(&op.diag, &op.offdiag, op.corner, shift);
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i * 7919 + j * 104729) % 1009) as f64 / 1009.0)
            .collect();
        let mut converged = false;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            for prev in &vectors[cluster_start..j] {
                let dot: f64 = prev.iter().zip(&x).map(|(p, v)| p * v).sum::<f64>() * h;
                for (xi, pi) in x.iter_mut().zip(prev) {
                    *xi -= dot * pi;
                }
            }
            normalize(&mut x, h);
            let previous = x.clone();
            factor.solve(&mut x);
            for prev in &vectors[cluster_start..j] {
                let dot: f64 = prev.iter().zip(&x).map(|(p, v)| p * v).sum::<f64>() * h;
                for (xi, pi) in x.iter_mut().zip(prev) {
                    *xi -= dot * pi;
                }
            }
            normalize(&mut x, h);
            // residual ‖A x − λ x‖ relative to the operator scale
            sturm::apply(&op.diag, &op.offdiag, op.corner, &x, &mut work);
            let resid = work
                .iter()
                .zip(&x)
                .map(|(ax, xi)| (ax - lambda * xi).powi(2))
                .sum::<f64>()
                .sqrt()
                * h.sqrt();
            let change = x
                .iter()
                .zip(&previous)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if resid <= 10.0 * tol + 1e3 * f64::EPSILON * scale || change < 1e-13 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::non_convergence(format!(
                "inverse iteration for eigenvalue #{} ({lambda:e}) did not converge in {MAX_INVERSE_ITERATIONS} steps",
                j + 1
            )));
        }
        // fix sign: largest component positive
        let imax = x
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        vectors.push(x);
    }
    Ok(vectors)
}

fn normalize(x: &mut [f64], h: f64) {
    let norm = (x.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Number of eigenvalues `≤ level`, via LDLᵀ inertia at a slightly raised
/// level. `O(n)` on intervals and `O(n²)` on circles (one orthogonal band
/// reduction); the spectrum is never formed.
pub fn count_below(op: &Operator1D, level: f64) -> usize {
    op.inertia_below(level + COUNT_SHIFT * level.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn free(kind: BoundaryKind, a: f64, b: f64, n: usize) -> Operator1D {
        let g = Grid1D::new(kind, a, b, n).unwrap();
        assemble(&vec![0.0; n], &g).unwrap()
    }

    #[test]
    fn free_dirichlet_spectrum() {
        let op = free(BoundaryKind::Dirichlet, 0.0, 1.0, 999);
        let r = lowest_eigenvalues(&op, 5).unwrap();
        for (j, v) in r.values.iter().enumerate() {
            let exact = ((j + 1) as f64 * PI).powi(2);
            assert!((v - exact).abs() / exact < 1e-3, "{v} vs {exact}");
        }
        // extrapolation improves on the raw values
        let ex = r.extrapolated();
        assert!((ex[0] - PI * PI).abs() < 1e-6 * PI * PI);
        for v in r.vectors.as_ref().unwrap() {
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>() * op.grid.h;
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn free_neumann_ground_state_is_zero() {
        let op = free(BoundaryKind::Neumann, 0.0, 1.0, 400);
        let r = lowest_eigenvalues(&op, 3).unwrap();
        assert!(r.values[0].abs() < 1e-8);
        assert!((r.values[1] - PI * PI).abs() / (PI * PI) < 1e-4);
    }

    #[test]
    fn free_periodic_spectrum_has_pairs() {
        let op = free(BoundaryKind::Periodic, 0.0, 2.0 * PI, 512);
        let r = lowest_eigenvalues(&op, 5).unwrap();
        let expected = [0.0, 1.0, 1.0, 4.0, 4.0];
        for (v, e) in r.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-3, "{v} vs {e}");
        }
        let vecs = r.vectors.unwrap();
        let dot: f64 = vecs[1]
            .iter()
            .zip(&vecs[2])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * op.grid.h;
        assert!(dot.abs() < 1e-8, "degenerate pair not orthogonal: {dot}");
    }

    #[test]
    fn count_below_free_dirichlet() {
        let op = free(BoundaryKind::Dirichlet, 0.0, 1.0, 999);
        assert_eq!(count_below(&op, 50.0), 2);
        assert_eq!(count_below(&op, 5.0), 0);
    }

    #[test]
    fn count_below_includes_level_on_tie() {
        // 2x... use the exact discrete eigenvalue of the free chain
        let op = free(BoundaryKind::Dirichlet, 0.0, 1.0, 99);
        let h = op.grid.h;
        let lambda1 = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert_eq!(count_below(&op, lambda1), 1);
    }

    #[test]
    fn rejects_non_finite_potential() {
        let g = Grid1D::new(BoundaryKind::Dirichlet, 0.0, 1.0, 32).unwrap();
        let mut v = vec![0.0; 32];
        v[5] = f64::NAN;
        assert!(matches!(assemble(&v, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn rejects_small_grid() {
        assert!(Grid1D::new(BoundaryKind::Dirichlet, 0.0, 1.0, 8).is_err());
        assert!(Grid1D::new(BoundaryKind::Dirichlet, 1.0, 0.0, 64).is_err());
    }

    #[test]
    fn too_many_eigenvalues_requested() {
        let op = free(BoundaryKind::Dirichlet, 0.0, 1.0, 20);
        assert!(lowest_eigenvalues(&op, 21).is_err());
    }
}
