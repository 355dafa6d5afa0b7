//! Eigenvalue counting for half-line operators with inverse-square tails and
//! the separated model assembled from angular and transverse spectra.
//!
//! A radial problem is `scale·(−d²/dρ² + c/ρ²)` on `(ρ₀, ∞)`. Under
//! `ρ = ρ₀eᵗ`, `u = e^{t/2}w` the equation `−u″ + (c/ρ²)u = −E u` becomes
//! `w″ = (¼ + c + E ρ₀² e^{2t}) w`, whose oscillation count is read off a
//! Prüfer phase. The problem is truncated with a Dirichlet end at ten times
//! the classical turning point, and the truncation is doubled until two
//! successive counts agree.

mod model;

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::spectral1d::oscillation::{count_from_phase, prufer_phase, PhaseOptions, PhaseProblem};
use crate::spectral1d::{EndCondition, COUNT_SHIFT};
use crate::stats::linear_fit;

pub use model::{
    angular_spectrum, assemble_model, default_schedule_constant, AssembledModel, FixedTransverse,
    ModeCurve, ModelEntry, ModelParams, PotentialTransverse, TransverseSpectrum, Variant,
};

/// Truncation radius in units of the classical turning point.
pub const TURNING_FACTOR: f64 = 10.0;

/// Doublings of the truncation radius before giving up.
pub const MAX_DOUBLINGS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialBc {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialProblem {
    /// Numerator `c` of the `c/ρ²` term.
    pub c_num: f64,
    #[serde(default = "one")]
    pub rho0: f64,
    #[serde(default = "dirichlet")]
    pub bc: RadialBc,
    #[serde(default = "one")]
    pub scale: f64,
    /// Positive energy offsets, strictly descending.
    #[serde(rename = "E_grid", default)]
    pub e_grid: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn dirichlet() -> RadialBc {
    RadialBc::Dirichlet
}

impl RadialProblem {
    pub fn new(c_num: f64) -> Self {
        Self {
            c_num,
            rho0: 1.0,
            bc: RadialBc::Dirichlet,
            scale: 1.0,
            e_grid: Vec::new(),
        }
    }

    pub fn with_grid(mut self, e_grid: Vec<f64>) -> Self {
        self.e_grid = e_grid;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho0.is_finite() && self.rho0 > 0.0) {
            return Err(Error::precondition(format!(
                "rho0 must be positive, got {}",
                self.rho0
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::precondition(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        if !self.c_num.is_finite() {
            return Err(Error::precondition("c_num must be finite"));
        }
        Ok(())
    }

    /// Angular frequency `√(−c − ¼)` of the oscillatory regime, if any.
    pub fn frequency(&self) -> Option<f64> {
        let s = -self.c_num - 0.25;
        (s > 0.0).then(|| s.sqrt())
    }
}

/// One radial count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialCount {
    /// Eigenvalues `≤ −E`.
    pub count: usize,
    /// Prüfer angle over `π` at the turning point, a continuous proxy of
    /// the count differing from it by a bounded offset; equal to `count`
    /// when the problem does not oscillate.
    pub phase: f64,
    /// Truncation radius at which the count stabilized.
    pub rho_max: f64,
}

fn left_condition(bc: RadialBc) -> EndCondition {
    match bc {
        RadialBc::Dirichlet => EndCondition::Dirichlet,
        // u′(ρ₀) = 0 ⇔ w′(0) = −w(0)/2
        RadialBc::Neumann => EndCondition::Data {
            value: 1.0,
            slope: -0.5,
        },
    }
}

/// Truncation length in `t` for a starting radius factor.
fn initial_span(problem: &RadialProblem, e: f64, factor: f64) -> f64 {
    let turning = (problem.c_num.abs().max(0.25) / e).sqrt();
    (factor * turning / problem.rho0).ln().max(2.0_f64.ln())
}

fn count_on(problem: &RadialProblem, e: f64, span: f64, turning: Option<f64>) -> Result<usize> {
    let base = 0.25 + problem.c_num;
    let growth = e * problem.rho0 * problem.rho0;
    let g = move |t: f64| -(base + growth * (2.0 * t).exp());
    let cuts: Vec<f64> = turning
        .into_iter()
        .chain((1..span.ceil() as usize).map(|k| k as f64))
        .collect();
    let phase_problem = PhaseProblem {
        g: &g,
        a: 0.0,
        b: span,
        breakpoints: &cuts,
        left: left_condition(problem.bc),
    };
    let trace = prufer_phase(&phase_problem, &PhaseOptions::default(), &[])?;
    Ok(count_from_phase(trace.theta_end, EndCondition::Dirichlet))
}

fn turning_point(problem: &RadialProblem, e: f64) -> Option<f64> {
    let s = -problem.c_num - 0.25;
    if s <= 0.0 {
        return None;
    }
    let t = 0.5 * (s / (e * problem.rho0 * problem.rho0)).ln();
    (t > 0.0).then_some(t)
}

fn phase_at_turning(problem: &RadialProblem, e: f64, t_turn: f64) -> Result<f64> {
    let s = problem.frequency().expect("oscillatory problem");
    let base = 0.25 + problem.c_num;
    let growth = e * problem.rho0 * problem.rho0;
    let g = move |t: f64| -(base + growth * (2.0 * t).exp());
    let phase_problem = PhaseProblem {
        g: &g,
        a: 0.0,
        b: t_turn,
        breakpoints: &[],
        left: left_condition(problem.bc),
    };
    let opts = PhaseOptions {
        scale: Some(s),
        ..PhaseOptions::default()
    };
    Ok(prufer_phase(&phase_problem, &opts, &[])?.theta_end / PI)
}

/// Count of eigenvalues `≤ −E` of the radial problem, with truncation
/// stabilization starting at `factor` turning-point radii.
pub fn count_radial_from(problem: &RadialProblem, e: f64, factor: f64) -> Result<RadialCount> {
    problem.validate()?;
    if !(e.is_finite() && e > 0.0) {
        return Err(Error::precondition(format!(
            "energy offset must be positive, got {e}"
        )));
    }
    // level −E raised by the tie shift
    let e_eff = e * (1.0 - COUNT_SHIFT) / problem.scale;
    let turning = turning_point(problem, e_eff);
    let mut span = initial_span(problem, e_eff, factor);
    let mut prev = count_on(problem, e_eff, span, turning)?;
    for _ in 0..MAX_DOUBLINGS {
        let next_span = span + 2.0_f64.ln();
        let next = count_on(problem, e_eff, next_span, turning)?;
        if next == prev {
            let phase = match turning {
                Some(t) => phase_at_turning(problem, e_eff, t)?,
                None => prev as f64,
            };
            return Ok(RadialCount {
                count: prev,
                phase,
                rho_max: problem.rho0 * span.exp(),
            });
        }
        prev = next;
        span = next_span;
    }
    let last = count_on(problem, e_eff, span + 2.0_f64.ln(), turning)?;
    Err(Error::non_convergence(format!(
        "radial count did not stabilize at E = {e}: last two counts {prev} and {last} at ρ_max = {}",
        problem.rho0 * span.exp()
    )))
}

pub fn count_radial(problem: &RadialProblem, e: f64) -> Result<RadialCount> {
    count_radial_from(problem, e, TURNING_FACTOR)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountEntry {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingCurve {
    pub entries: Vec<CountEntry>,
    /// Reference energy the offsets are measured from.
    pub threshold: f64,
    pub description: String,
}

impl CountingCurve {
    pub fn energies(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.e).collect()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.n).collect()
    }

    fn is_monotone(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].n >= w[0].n)
    }
}

/// Validates a descending grid of positive offsets.
pub fn check_e_grid(e_grid: &[f64]) -> Result<()> {
    if e_grid.is_empty() {
        return Err(Error::precondition("E grid is empty"));
    }
    if e_grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::precondition(
            "E grid entries must be positive and finite",
        ));
    }
    if e_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::precondition("E grid must be strictly descending"));
    }
    Ok(())
}

/// `per_decade` logarithmically spaced offsets from `e_max` down to `e_min`.
pub fn log_grid(e_max: f64, e_min: f64, per_decade: usize) -> Vec<f64> {
    let decades = (e_max / e_min).log10();
    let steps = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=steps)
        .map(|i| e_max * (e_min / e_max).powf(i as f64 / steps as f64))
        .collect()
}

pub fn counting_curve(problem: &RadialProblem) -> Result<CountingCurve> {
    check_e_grid(&problem.e_grid)?;
    let counts: Vec<Result<RadialCount>> = problem
        .e_grid
        .par_iter()
        .map(|e| count_radial(problem, *e))
        .collect();
    let mut entries = Vec::with_capacity(counts.len());
    for (e, c) in problem.e_grid.iter().zip(counts) {
        let c = c?;
        entries.push(CountEntry {
            e: *e,
            n: c.count,
            phase: c.phase,
        });
    }
    let mut curve = CountingCurve {
        entries,
        threshold: 0.0,
        description: format!(
            "radial c_num={} rho0={} bc={:?} scale={}",
            problem.c_num, problem.rho0, problem.bc, problem.scale
        ),
    };
    if !curve.is_monotone() {
        // re-stabilize from a larger truncation
        for entry in curve.entries.iter_mut() {
            let c = count_radial_from(problem, entry.e, 16.0 * TURNING_FACTOR)?;
            entry.n = c.count;
        }
        if !curve.is_monotone() {
            return Err(Error::non_convergence(
                "counting curve is not monotone after re-stabilization",
            ));
        }
    }
    Ok(curve)
}

/// Which column of a counting curve a slope is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeTarget {
    /// Integer counts.
    Count,
    /// Continuous phase counts.
    Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation over the window.
    pub residual: f64,
    /// `[E_min, E_max]` of the points fitted.
    pub window: [f64; 2],
    pub points: usize,
    pub target: SlopeTarget,
    /// All fitted values equal; the slope is reported as zero.
    pub degenerate: bool,
}

/// Least-squares fit of `N` (or the phase count) against `|ln E|` over the
/// entries below the largest decade of the grid.
pub fn fit_log_slope(curve: &CountingCurve, target: SlopeTarget) -> Result<SlopeFit> {
    let e_max = curve
        .entries
        .iter()
        .map(|e| e.e)
        .fold(f64::NEG_INFINITY, f64::max);
    fit_log_slope_window(curve, target, [0.0, e_max / 10.0 * (1.0 + 1e-12)])
}

/// As [`fit_log_slope`] over the entries with `E` in `window`.
pub fn fit_log_slope_window(
    curve: &CountingCurve,
    target: SlopeTarget,
    window: [f64; 2],
) -> Result<SlopeFit> {
    let entries = &curve.entries;
    if entries.len() < 10 {
        return Err(Error::precondition(format!(
            "slope fit needs at least 10 entries, got {}",
            entries.len()
        )));
    }
    let (lo, hi) = entries
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e.e), hi.max(e.e))
        });
    if (hi / lo).log10() < 4.0 - 1e-9 {
        return Err(Error::precondition(format!(
            "slope fit needs at least 4 decades of E, got {:.3}",
            (hi / lo).log10()
        )));
    }
    let chosen: Vec<&CountEntry> = entries
        .iter()
        .filter(|e| e.e >= window[0] && e.e <= window[1])
        .collect();
    if chosen.len() < 3 {
        return Err(Error::precondition(format!(
            "slope window [{:e}, {:e}] holds {} entries",
            window[0],
            window[1],
            chosen.len()
        )));
    }
    let xs: Vec<f64> = chosen.iter().map(|e| e.e.ln().abs()).collect();
    let ys: Vec<f64> = chosen
        .iter()
        .map(|e| match target {
            SlopeTarget::Count => e.n as f64,
            SlopeTarget::Phase => e.phase,
        })
        .collect();
    let e_lo = chosen.iter().map(|e| e.e).fold(f64::INFINITY, f64::min);
    let e_hi = chosen.iter().map(|e| e.e).fold(f64::NEG_INFINITY, f64::max);
    if ys.iter().all(|y| *y == ys[0]) {
        return Ok(SlopeFit {
            slope: 0.0,
            intercept: ys[0],
            residual: 0.0,
            window: [e_lo, e_hi],
            points: ys.len(),
            target,
            degenerate: true,
        });
    }
    let fit = linear_fit(&xs, &ys).ok_or_else(|| Error::precondition("degenerate slope window"))?;
    Ok(SlopeFit {
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.max_residual,
        window: [e_lo, e_hi],
        points: ys.len(),
        target,
        degenerate: false,
    })
}

/// `(1/2π)·√((c − ¼)₊)`.
pub fn kirsch_simon_slope(c: f64) -> f64 {
    (c - 0.25).max(0.0).sqrt() / (2.0 * PI)
}

/// Writes `E,lnE_abs,N`.
pub fn write_counting_csv(curve: &CountingCurve, mut out: impl Write) -> Result<()> {
    writeln!(out, "E,lnE_abs,N")?;
    for e in &curve.entries {
        writeln!(
            out,
            "{},{},{}",
            fmt_real(e.e),
            fmt_real(e.e.ln().abs()),
            e.n
        )?;
    }
    Ok(())
}
