//! Prüfer-angle shooting for `−u″ + V u = E u`.
//!
//! Writing `u = r sin θ`, `u′ = S r cos θ` for a positive scale `S` turns the
//! equation into the first-order phase equation
//!
//! ```text
//! θ′ = S cos²θ + ((E − V)/S) sin²θ
//! ```
//!
//! Zeros of `u` are exactly the points where `θ` crosses a multiple of `π`,
//! and it only ever crosses upwards. By Sturm oscillation theory the number
//! of eigenvalues strictly below `E` of the problem on `(a, b)` with
//! separated end conditions is `#{k ≥ 0 : θ(b) > β + kπ}`, where `θ(a) ∈ [0, π)`
//! encodes the left condition and `β ∈ (0, π]` the right one (`π` for
//! Dirichlet, `π/2` for Neumann). With Dirichlet at both ends this is the
//! number of zeros of the shot solution in the open interval `(a, b)`; when
//! `E` is itself an eigenvalue the zero at `b` is not counted.
//!
//! The scale `S` may change between integration pieces; the angle is then
//! remapped through `tan θ_new = (S_new/S_old) tan θ_old` on the same branch,
//! which preserves the zero count.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    Dirichlet,
    Neumann,
    /// Prescribed `(u, u′)` at the left end.
    Data {
        value: f64,
        slope: f64,
    },
}

impl EndCondition {
    fn left_angle(self, scale: f64) -> f64 {
        match self {
            EndCondition::Dirichlet => 0.0,
            EndCondition::Neumann => FRAC_PI_2,
            EndCondition::Data { value, slope } => {
                let t = (scale * value).atan2(slope);
                // branch in [0, π)
                if t < 0.0 {
                    t + PI
                } else if t >= PI {
                    t - PI
                } else {
                    t
                }
            }
        }
    }

    fn right_target(self) -> f64 {
        match self {
            EndCondition::Dirichlet => PI,
            EndCondition::Neumann => FRAC_PI_2,
            EndCondition::Data { value, slope } => {
                // sin θ·slope = cos θ·S·value is scale dependent; only the
                // two standard conditions are meaningful on the right.
                let _ = (value, slope);
                PI
            }
        }
    }
}

/// `θ′ = S cos²θ + (g(x)/S) sin²θ` on `[a, b]` with `g = E − V`.
pub struct PhaseProblem<'a> {
    pub g: &'a (dyn Fn(f64) -> f64 + Sync),
    pub a: f64,
    pub b: f64,
    /// Points where `g` may be discontinuous; integration restarts there.
    pub breakpoints: &'a [f64],
    pub left: EndCondition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseOptions {
    /// Fixed Prüfer scale; `None` picks `√|g|` per piece.
    pub scale: Option<f64>,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self {
            scale: None,
            atol: 1e-10,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub theta_end: f64,
    /// `θ` at the requested checkpoints, in the order given, in the scale
    /// active there (the fixed scale when one is set).
    pub at_checkpoints: Vec<f64>,
    /// Scale in effect at the right end.
    pub scale_end: f64,
    pub steps: usize,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn piece_scale(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let mut m: f64 = 0.0;
    for k in 0..=8 {
        let x = lo + (hi - lo) * k as f64 / 8.0;
        let v = g(x);
        if v.is_finite() {
            m = m.max(v.abs());
        }
    }
    m.sqrt().max(1e-3)
}

fn remap(theta: f64, s_old: f64, s_new: f64) -> f64 {
    if s_old == s_new {
        return theta;
    }
    let k = (theta / PI).floor();
    let phi = theta - k * PI;
    let mut phi_new = (s_new * phi.sin()).atan2(s_old * phi.cos());
    if phi_new < 0.0 {
        phi_new += PI;
    }
    k * PI + phi_new
}

/// Integrates the Prüfer phase across `[a, b]`.
pub fn prufer_phase(
    problem: &PhaseProblem<'_>,
    opts: &PhaseOptions,
    checkpoints: &[f64],
) -> Result<PhaseTrace> {
    let (a, b) = (problem.a, problem.b);
    if !(a < b) {
        return Err(Error::precondition(format!(
            "empty shooting interval ({a}, {b})"
        )));
    }
    let g = problem.g;
    let mut cuts: Vec<f64> = problem
        .breakpoints
        .iter()
        .chain(checkpoints.iter())
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let first_scale = opts
        .scale
        .unwrap_or_else(|| piece_scale(g, cuts[0], cuts[1]));
    let mut scale = first_scale;
    let mut theta = problem.left.left_angle(scale);
    let mut at_checkpoints = vec![f64::NAN; checkpoints.len()];
    let mut steps = 0usize;
    for (ci, c) in checkpoints.iter().enumerate() {
        if *c <= a {
            at_checkpoints[ci] = theta;
        }
    }

    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if let Some(s) = opts.scale {
            scale = s;
        } else {
            let s = piece_scale(g, lo, hi);
            theta = remap(theta, scale, s);
            scale = s;
        }
        let s = scale;
        let rhs = |x: f64, th: f64| {
            let (sn, cs) = th.sin_cos();
            s * cs * cs + g(x) / s * sn * sn
        };
        let mut x = lo;
        let rate = s + piece_scale(g, lo, hi).powi(2) / s;
        let mut hstep = (hi - lo).min(0.5 / rate.max(1e-12));
        let min_step = 1e-13 * (hi.abs().max(lo.abs()).max(1.0));
        while x < hi {
            if steps >= opts.max_steps {
                return Err(Error::non_convergence(format!(
                    "Prüfer integration exceeded {} steps at x = {x}",
                    opts.max_steps
                )));
            }
            let last = x + hstep >= hi;
            let hh = if last { hi - x } else { hstep };
            let k1 = rhs(x, theta);
            let k2 = rhs(x + C2 * hh, theta + hh * A21 * k1);
            let k3 = rhs(x + C3 * hh, theta + hh * (A31 * k1 + A32 * k2));
            let k4 = rhs(x + C4 * hh, theta + hh * (A41 * k1 + A42 * k2 + A43 * k3));
            let k5 = rhs(
                x + C5 * hh,
                theta + hh * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
            );
            let k6 = rhs(
                x + hh,
                theta + hh * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
            );
            let next = theta + hh * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
            let k7 = rhs(x + hh, next);
            let err = (hh * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)).abs();
            steps += 1;
            if !next.is_finite() {
                return Err(Error::non_convergence(format!(
                    "Prüfer phase became non-finite near x = {x}"
                )));
            }
            if err <= opts.atol {
                x = if last { hi } else { x + hh };
                theta = next;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * (opts.atol / err).powf(0.2)).clamp(0.2, 5.0)
                };
                hstep = (hh * factor).max(min_step);
            } else {
                hstep = hh * (0.9 * (opts.atol / err).powf(0.2)).clamp(0.1, 0.9);
                if hstep < min_step {
                    return Err(Error::non_convergence(format!(
                        "step-size underflow ({hstep:e}) in Prüfer integration near x = {x}"
                    )));
                }
            }
        }
        for (ci, c) in checkpoints.iter().enumerate() {
            if *c == hi {
                at_checkpoints[ci] = theta;
            }
        }
    }
    for (ci, c) in checkpoints.iter().enumerate() {
        if *c >= b && at_checkpoints[ci].is_nan() {
            at_checkpoints[ci] = theta;
        }
    }
    Ok(PhaseTrace {
        theta_end: theta,
        at_checkpoints,
        scale_end: scale,
        steps,
    })
}

/// Number of eigenvalues below `energy` for `−u″ + V u` on `(a, b)` with
/// the given end conditions.
pub fn count_from_phase(theta_end: f64, right: EndCondition) -> usize {
    let beta = right.right_target();
    if theta_end > beta {
        ((theta_end - beta) / PI).ceil() as usize
    } else {
        0
    }
}

/// Number of eigenvalues strictly below `energy` of `−d²/dx² + V` on
/// `(a, b)`, counted by the oscillation of the solution shot from the left
/// end. `breakpoints` lists discontinuities of `V`.
pub fn oscillation_count(
    potential: &(dyn Fn(f64) -> f64 + Sync),
    a: f64,
    b: f64,
    left: EndCondition,
    right: EndCondition,
    energy: f64,
    breakpoints: &[f64],
) -> Result<usize> {
    let g = |x: f64| energy - potential(x);
    let problem = PhaseProblem {
        g: &g,
        a,
        b,
        breakpoints,
        left,
    };
    let trace = prufer_phase(&problem, &PhaseOptions::default(), &[])?;
    Ok(count_from_phase(trace.theta_end, right))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero(_: f64) -> f64 {
        0.0
    }

    #[test]
    fn free_dirichlet_counts() {
        let d = EndCondition::Dirichlet;
        assert_eq!(
            oscillation_count(&zero, 0.0, 1.0, d, d, 50.0, &[]).unwrap(),
            2
        );
        assert_eq!(
            oscillation_count(&zero, 0.0, 1.0, d, d, PI * PI / 2.0, &[]).unwrap(),
            0
        );
        // just above 4π²
        assert_eq!(
            oscillation_count(&zero, 0.0, 1.0, d, d, 4.0 * PI * PI + 1e-6, &[]).unwrap(),
            2
        );
    }

    #[test]
    fn exact_eigenvalue_is_not_counted() {
        // E = π²: the shot solution sin(πx) vanishes at b only.
        let d = EndCondition::Dirichlet;
        let n = oscillation_count(&zero, 0.0, 1.0, d, d, PI * PI * (1.0 - 1e-9), &[]).unwrap();
        assert_eq!(n, 0);
        let n = oscillation_count(&zero, 0.0, 1.0, d, d, PI * PI * (1.0 + 1e-9), &[]).unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn free_neumann_counts() {
        // Neumann–Neumann on (0,1): eigenvalues (kπ)², k ≥ 0.
        let nm = EndCondition::Neumann;
        assert_eq!(
            oscillation_count(&zero, 0.0, 1.0, nm, nm, 1e-6, &[]).unwrap(),
            1
        );
        assert_eq!(
            oscillation_count(&zero, 0.0, 1.0, nm, nm, -1.0, &[]).unwrap(),
            0
        );
        assert_eq!(
            oscillation_count(&zero, 0.0, 1.0, nm, nm, 50.0, &[]).unwrap(),
            3
        );
        // mixed: Dirichlet left, Neumann right → ((k+½)π)²
        let d = EndCondition::Dirichlet;
        assert_eq!(
            oscillation_count(&zero, 0.0, 1.0, d, nm, 2.5, &[]).unwrap(),
            1
        );
        assert_eq!(
            oscillation_count(&zero, 0.0, 1.0, d, nm, 2.4, &[]).unwrap(),
            0
        );
    }

    #[test]
    fn square_well_with_breakpoints() {
        // depth 4, half-width 1 on (−20, 20): one even and one odd bound state.
        let v = |x: f64| if x.abs() < 1.0 { -4.0 } else { 0.0 };
        let d = EndCondition::Dirichlet;
        let n = oscillation_count(&v, -20.0, 20.0, d, d, -0.01, &[-1.0, 1.0]).unwrap();
        assert_eq!(n, 2);
        let n = oscillation_count(&v, -20.0, 20.0, d, d, -1.0, &[-1.0, 1.0]).unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn remap_preserves_branch() {
        for &th in &[0.0, 0.3, FRAC_PI_2, 2.0, PI, 4.0, 7.5] {
            let r = remap(th, 1.0, 3.0);
            assert_eq!((r / PI).floor(), (th / PI).floor());
            let back = remap(r, 3.0, 1.0);
            assert!((back - th).abs() < 1e-12);
        }
    }
}
