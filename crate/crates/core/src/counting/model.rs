//! The separated model: a direct sum over angular modes `m` and transverse
//! modes `n` of rescaled half-line operators with inverse-square terms.
//!
//! Lower variant: mode `m` has `c = λ_m − (1 − C(δ+ε))/4`, a Dirichlet end
//! at `ρ = 1`, transverse Dirichlet truncations on `(−δR, δR)` and offset
//! `μ = (E − ε₀ + λ_n)·R²(1 − δκ_∞)²`.
//!
//! Upper variant: `c = (λ_m − (1 + A(δ+ε))/4)/(1 + 2δκ_∞)²`, a Neumann end
//! at `ρ = 1`, transverse Neumann truncations and `μ = (E − ε₀ + λ_n)·R²`.
//!
//! `R` is either fixed or `R(E) = R₀ + K|ln E|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_e_grid, count_radial, fit_log_slope, CountEntry, CountingCurve, RadialBc, RadialCount,
    RadialProblem, SlopeFit, SlopeTarget,
};
use crate::curvature_operator::{k_from_values, ks_spectrum};
use crate::error::{Error, Result};
use crate::geometry::SampledCurve;
use crate::spectral1d::{lowest_eigenvalues_against, BoundaryKind, EigOptions, Grid1D};
use crate::threshold::{discretize, threshold_for, PotentialFactory, PotentialSpec};

/// Spectra of the transverse truncations `H_{L,D/N}`.
pub trait TransverseSpectrum: Send + Sync {
    fn eps0(&self) -> f64;

    fn v_inf(&self) -> f64;

    /// Half-width of a hard wall, beyond which truncation changes nothing.
    fn support(&self) -> Option<f64> {
        None
    }

    /// The `k` lowest eigenvalues on `(−half, half)`.
    fn eigenvalues(&self, half: f64, k: usize, kind: BoundaryKind) -> Result<Vec<f64>>;
}

/// Prescribed transverse eigenvalues, independent of the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedTransverse {
    pub eps0: f64,
    pub v_inf: f64,
    pub values: Vec<f64>,
}

impl TransverseSpectrum for FixedTransverse {
    fn eps0(&self) -> f64 {
        self.eps0
    }

    fn v_inf(&self) -> f64 {
        self.v_inf
    }

    fn eigenvalues(&self, _half: f64, k: usize, _kind: BoundaryKind) -> Result<Vec<f64>> {
        Ok((0..k)
            .map(|i| self.values.get(i).copied().unwrap_or(f64::INFINITY))
            .collect())
    }
}

/// Truncations of a potential family, discretized like the threshold solve.
pub struct PotentialTransverse {
    potential: PotentialFactory,
    eps0: f64,
    points: usize,
}

impl PotentialTransverse {
    /// `ε₀` from the Dirichlet truncation at `l_ref` with `points` nodes.
    pub fn new(spec: &PotentialSpec, l_ref: f64, points: usize) -> Result<Self> {
        let potential = spec.build()?;
        let report = threshold_for(potential.as_ref(), l_ref, points)?;
        Ok(Self {
            potential,
            eps0: report.eps0,
            points: report.n_used,
        })
    }
}

impl TransverseSpectrum for PotentialTransverse {
    fn eps0(&self) -> f64 {
        self.eps0
    }

    fn v_inf(&self) -> f64 {
        self.potential.v_inf()
    }

    fn support(&self) -> Option<f64> {
        self.potential.hard_wall()
    }

    fn eigenvalues(&self, half: f64, k: usize, kind: BoundaryKind) -> Result<Vec<f64>> {
        let (half, kind) = match self.potential.hard_wall() {
            Some(a) if half >= a => (a, BoundaryKind::Dirichlet),
            _ => (half, kind),
        };
        if !(half > 0.0) {
            return Err(Error::precondition(format!(
                "transverse half-width must be positive, got {half}"
            )));
        }
        let (fine, coarse) = match kind {
            BoundaryKind::Neumann => (self.points + 1, self.points.div_ceil(2)),
            _ => (self.points, (self.points - 1) / 2),
        };
        let grid = Grid1D::new(kind, -half, half, fine)?;
        let coarse_grid = Grid1D::new(kind, -half, half, coarse)?;
        let op = discretize(self.potential.as_ref(), &grid)?;
        let coarse_op = discretize(self.potential.as_ref(), &coarse_grid)?;
        let opts = EigOptions {
            tol: 0.0,
            vectors: false,
            richardson: true,
        };
        Ok(lowest_eigenvalues_against(&op, &coarse_op, k, &opts)?.extrapolated())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default)]
    pub variant: Variant,
    pub delta: f64,
    /// `C` for the lower variant, `A` for the upper one.
    #[serde(default)]
    pub c_knob: f64,
    #[serde(default)]
    pub eps_knob: f64,
    /// Fixed radius, or the offset `R₀` when `K` is also given.
    #[serde(default, rename = "R")]
    pub r: Option<f64>,
    /// Schedule constant in `R(E) = R₀ + K|ln E|`.
    #[serde(default, rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "E_grid")]
    pub e_grid: Vec<f64>,
}

/// Counts of one `(m, n)` channel across the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCurve {
    pub m: usize,
    pub n: usize,
    pub lambda_m: f64,
    pub c_num: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "R")]
    pub r: f64,
    /// Radial offset of the `n = 1` channel.
    pub mu: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub phase: f64,
    /// Total count of the `n = 2` transverse channel.
    pub channel2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledModel {
    pub variant: Variant,
    pub delta: f64,
    pub kappa_inf: f64,
    pub c_knob: f64,
    pub eps_knob: f64,
    pub eps0: f64,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    pub modes_angular: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub entries: Vec<ModelEntry>,
    pub channels: Vec<ModeCurve>,
    pub counts: CountingCurve,
    #[serde(rename = "k_S")]
    pub k_s: f64,
    /// Slope the variant tends to as `E → 0`.
    pub predicted_slope: f64,
    pub fit_phase: Option<SlopeFit>,
    pub fit_count: Option<SlopeFit>,
    /// `(fitted − k_S)/k_S` from the phase fit.
    pub relative_error: Option<f64>,
}

/// Default `K`: large enough that `λ₁(H_{δR}) − ε₀` decays faster than
/// `E`, and that `δR` clears a hard wall at the largest `E`.
pub fn default_schedule_constant(
    delta: f64,
    transverse: &dyn TransverseSpectrum,
    e_grid: &[f64],
) -> f64 {
    let mut k: f64 = 1.0;
    let margin = transverse.v_inf() - transverse.eps0();
    if margin.is_finite() && margin > 0.0 {
        k = k.max(2.0 / (delta * margin.sqrt()));
    }
    if let (Some(a), Some(e_max)) = (transverse.support(), e_grid.first()) {
        let log = e_max.ln().abs();
        if log > 0.0 {
            k = k.max(1.5 * a / (delta * log));
        }
    }
    k
}

struct Setup {
    bc: RadialBc,
    kind: BoundaryKind,
    shrink: f64,
    coefficients: Vec<f64>,
}

fn setup(angular: &[f64], kappa_inf: f64, p: &ModelParams) -> Setup {
    let knob = p.c_knob * (p.delta + p.eps_knob);
    match p.variant {
        Variant::Lower => Setup {
            bc: RadialBc::Dirichlet,
            kind: BoundaryKind::Dirichlet,
            shrink: (1.0 - p.delta * kappa_inf).powi(2),
            coefficients: angular.iter().map(|l| l - (1.0 - knob) / 4.0).collect(),
        },
        Variant::Upper => {
            let inflate = (1.0 + 2.0 * p.delta * kappa_inf).powi(2);
            Setup {
                bc: RadialBc::Neumann,
                kind: BoundaryKind::Neumann,
                shrink: 1.0,
                coefficients: angular
                    .iter()
                    .map(|l| (l - (1.0 + knob) / 4.0) / inflate)
                    .collect(),
            }
        }
    }
}

fn validate(p: &ModelParams, kappa_inf: f64) -> Result<()> {
    let limit = if kappa_inf > 0.0 {
        1.0 / kappa_inf
    } else {
        f64::INFINITY
    };
    if !(p.delta > 0.0 && p.delta < limit) {
        return Err(Error::precondition(format!(
            "delta must lie in (0, 1/κ_∞) = (0, {limit}), got {}",
            p.delta
        )));
    }
    for (name, v) in [("c_knob", p.c_knob), ("eps_knob", p.eps_knob)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::precondition(format!(
                "{name} must be nonnegative, got {v}"
            )));
        }
    }
    if let Some(r) = p.r {
        if !(r.is_finite() && r >= 0.0) || (r == 0.0 && p.k.is_none()) {
            return Err(Error::precondition(format!("R must be positive, got {r}")));
        }
    }
    if let Some(k) = p.k {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::precondition(format!("K must be positive, got {k}")));
        }
        if p.e_grid.iter().any(|e| *e >= 1.0) {
            return Err(Error::precondition("the R(E) schedule needs E < 1"));
        }
    }
    check_e_grid(&p.e_grid)
}

struct EnergyResult {
    entry: ModelEntry,
    /// `counts[n][m]` for the channels evaluated.
    counts: Vec<Vec<usize>>,
}

/// Transverse channels beyond the second are evaluated while any angular
/// mode still counts; this caps the search.
const MAX_CHANNELS: usize = 16;

fn evaluate(
    e: f64,
    r: f64,
    setup: &Setup,
    p: &ModelParams,
    transverse: &dyn TransverseSpectrum,
) -> Result<EnergyResult> {
    let eps0 = transverse.eps0();
    let lambdas = transverse.eigenvalues(p.delta * r, MAX_CHANNELS.min(4), setup.kind)?;
    if !(lambdas.len() >= 2 && lambdas[1] > eps0) {
        return Err(Error::precondition(format!(
            "R = {r} too small: λ₂ of the transverse truncation does not exceed ε₀"
        )));
    }
    let mut lambdas = lambdas;
    let mut counts = Vec::new();
    let mut total = 0usize;
    let mut phase = 0.0;
    let mut mu1 = f64::NAN;
    let mut channel2 = 0usize;
    for n in 0..MAX_CHANNELS {
        if n >= lambdas.len() {
            lambdas = transverse.eigenvalues(
                p.delta * r,
                (2 * lambdas.len()).min(MAX_CHANNELS),
                setup.kind,
            )?;
        }
        let mut offset = lambdas[n] - eps0;
        if n == 0 && p.variant == Variant::Lower {
            // Dirichlet truncations never fall below ε₀
            offset = offset.max(0.0);
        }
        let mu = (e + offset) * r * r * setup.shrink;
        if !(mu > 0.0) {
            return Err(Error::precondition(format!(
                "radial offset μ = {mu} is not positive at E = {e}; increase R or K"
            )));
        }
        if n == 0 {
            mu1 = mu;
        }
        let row: Vec<RadialCount> = setup
            .coefficients
            .iter()
            .map(|c| {
                if *c >= 0.0 {
                    Ok(RadialCount {
                        count: 0,
                        phase: 0.0,
                        rho_max: 1.0,
                    })
                } else {
                    let problem = RadialProblem {
                        bc: setup.bc,
                        ..RadialProblem::new(*c)
                    };
                    count_radial(&problem, mu)
                }
            })
            .collect::<Result<_>>()?;
        let row_total: usize = row.iter().map(|c| c.count).sum();
        total += row_total;
        phase += row.iter().map(|c| c.phase).sum::<f64>();
        if n == 1 {
            channel2 = row_total;
        }
        counts.push(row.iter().map(|c| c.count).collect());
        if n >= 1 && row_total == 0 {
            return Ok(EnergyResult {
                entry: ModelEntry {
                    e,
                    r,
                    mu: mu1,
                    n: total,
                    phase,
                    channel2,
                },
                counts,
            });
        }
    }
    Err(Error::non_convergence(format!(
        "transverse channels still counting after {MAX_CHANNELS} modes at E = {e}"
    )))
}

/// Counts `N(E)` of the separated model for the given angular spectrum
/// (ascending `λ_m(𝒦)`), sup-curvature and transverse spectra.
pub fn assemble_model(
    angular: &[f64],
    kappa_inf: f64,
    transverse: &dyn TransverseSpectrum,
    params: &ModelParams,
) -> Result<AssembledModel> {
    validate(params, kappa_inf)?;
    let setup = setup(angular, kappa_inf, params);
    let (r0, k) = match (params.r, params.k) {
        (Some(r), None) => (r, 0.0),
        (r, Some(k)) => (r.unwrap_or(0.0), k),
        (None, None) => (
            0.0,
            default_schedule_constant(params.delta, transverse, &params.e_grid),
        ),
    };
    let results: Vec<Result<EnergyResult>> = params
        .e_grid
        .par_iter()
        .map(|&e| {
            let r = r0 + k * e.ln().abs();
            evaluate(e, r, &setup, params, transverse)
        })
        .collect();
    let results: Vec<EnergyResult> = results.into_iter().collect::<Result<_>>()?;

    let n_max = results.iter().map(|r| r.counts.len()).max().unwrap_or(0);
    let mut channels = Vec::new();
    for n in 0..n_max {
        for (m, (lambda, c)) in angular.iter().zip(&setup.coefficients).enumerate() {
            let counts: Vec<usize> = results
                .iter()
                .map(|r| r.counts.get(n).map_or(0, |row| row[m]))
                .collect();
            if counts.iter().any(|c| *c > 0) {
                channels.push(ModeCurve {
                    m: m + 1,
                    n: n + 1,
                    lambda_m: *lambda,
                    c_num: *c,
                    counts,
                });
            }
        }
    }
    let entries: Vec<ModelEntry> = results.iter().map(|r| r.entry).collect();
    let counts = CountingCurve {
        entries: entries
            .iter()
            .map(|e| CountEntry {
                e: e.e,
                n: e.n,
                phase: e.phase,
            })
            .collect(),
        threshold: transverse.eps0(),
        description: format!(
            "{:?} model, delta={}, c_knob={}, eps_knob={}",
            params.variant, params.delta, params.c_knob, params.eps_knob
        ),
    };
    let fit_phase = fit_log_slope(&counts, SlopeTarget::Phase).ok();
    let fit_count = fit_log_slope(&counts, SlopeTarget::Count).ok();
    let k_s = k_from_values(angular);
    let predicted_slope: f64 = setup
        .coefficients
        .iter()
        .map(|c| super::kirsch_simon_slope(-c))
        .sum();
    let relative_error = match (&fit_phase, k_s > 0.0) {
        (Some(f), true) => Some((f.slope - k_s) / k_s),
        _ => None,
    };
    Ok(AssembledModel {
        variant: params.variant,
        delta: params.delta,
        kappa_inf,
        c_knob: params.c_knob,
        eps_knob: params.eps_knob,
        eps0: transverse.eps0(),
        r: params.r,
        k,
        modes_angular: angular.to_vec(),
        coefficients: setup.coefficients,
        entries,
        channels,
        counts,
        k_s,
        predicted_slope,
        fit_phase,
        fit_count,
        relative_error,
    })
}

/// Eigenvalues of `𝒦` below `level` (at least one), from the extrapolated
/// finite-difference spectrum with `n` points.
pub fn angular_spectrum(curve: &SampledCurve, n: usize, level: f64) -> Result<Vec<f64>> {
    let mut k = 8usize;
    loop {
        let k_eff = k.min(n);
        let values = ks_spectrum(curve, n, "fd", k_eff)?.extrapolated();
        if values.last().is_some_and(|v| *v >= level) || k_eff == n {
            let below: Vec<f64> = values.iter().copied().filter(|v| *v < level).collect();
            return Ok(if below.is_empty() {
                vec![values[0]]
            } else {
                below
            });
        }
        k *= 2;
    }
}
