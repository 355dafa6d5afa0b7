//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::time::{Duration, Instant};

use conebound::counting::{
    angular_spectrum, assemble_model, counting_curve, fit_log_slope_window, kirsch_simon_slope,
    log_grid, ModelParams, PotentialTransverse, RadialProblem, SlopeTarget, Variant,
};
use conebound::curvature_operator::{ks_constant_with, KsOptions};
use conebound::geometry::{build_curve, sup_curvature, CurveSpec};
use conebound::threshold::{
    agmon_norms, compute_threshold, truncation_sweep, PotentialSpec, SweepOptions,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn timed(f: impl FnOnce() -> Verdict) -> (Verdict, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn report(
    id: usize,
    title: &str,
    limit: Option<Duration>,
    verdict: Verdict,
    elapsed: Duration,
) -> bool {
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = verdict.pass && in_time;
    let budget = limit.map_or(String::new(), |l| {
        format!(" (limit {:.0} s)", l.as_secs_f64())
    });
    writeln!(
        std::io::stderr(),
        "criterion {id} {}: {title} | {} | {:.3} s{budget}",
        if pass { "PASS" } else { "FAIL" },
        verdict.detail,
        elapsed.as_secs_f64()
    )
    .unwrap();
    pass
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ks_latitudes() -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, theta) in [("pi/3", PI / 3.0), ("pi/4", PI / 4.0), ("pi/6", PI / 6.0)] {
        let (verdict, t) = timed(|| {
            let curve = build_curve(&CurveSpec::latitude(theta), 1024).unwrap();
            let r = ks_constant_with(
                &curve,
                &KsOptions {
                    n: 1024,
                    ..KsOptions::default()
                },
            )
            .unwrap();
            let expected = 1.0 / (theta.tan() * 4.0 * PI);
            let err = rel(r.k_s, expected);
            Verdict {
                pass: err < 1e-4,
                detail: format!("{name}: k_S {:.8} rel err {err:.1e}", r.k_s),
            }
        });
        pass &= verdict.pass && t < Duration::from_secs(1);
        parts.push(format!("{} in {:.3} s", verdict.detail, t.as_secs_f64()));
    }
    (pass, parts.join("; "))
}

fn thresholds() -> Verdict {
    let hard = compute_threshold(&PotentialSpec::hard_wall(1.0), 1.0, 1025).unwrap();
    let hard_err = rel(hard.eps0, PI * PI / 4.0);
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|w| {
            compute_threshold(&PotentialSpec::delta_approx(2.0, *w), 10.0, 8193)
                .unwrap()
                .eps0
                + 1.0
        })
        .collect();
    let ratios: Vec<f64> = errs.windows(2).map(|p| (p[0] / p[1]).abs()).collect();
    let halving = ratios.iter().all(|r| (1.4..=2.6).contains(r));
    let delta_rel = errs[2].abs();
    Verdict {
        pass: hard_err < 1e-5 && delta_rel < 0.02 && halving,
        detail: format!(
            "hard_wall rel err {hard_err:.1e}; delta errors {:.4} {:.4} {:.4}, ratios {:.3} {:.3}",
            errs[0], errs[1], errs[2], ratios[0], ratios[1]
        ),
    }
}

fn l_grid() -> Vec<f64> {
    (4..=14).map(f64::from).collect()
}

fn square_well() -> PotentialSpec {
    PotentialSpec::square_well(4.0, 1.0)
}

fn bracketing() -> Verdict {
    let s = truncation_sweep(&square_well(), &l_grid(), &SweepOptions::default()).unwrap();
    let bracket = s
        .lam1_n
        .iter()
        .zip(&s.lam1_d)
        .all(|(n, d)| *n <= s.eps0 && s.eps0 <= *d);
    let fits = s.rate_n.fitted
        && s.rate_d.fitted
        && s.rate_n.r_squared > 0.99
        && s.rate_d.r_squared > 0.99;
    Verdict {
        pass: bracket && fits,
        detail: format!(
            "bracket {bracket}; eps0 {:.8}; R² N {:.6} D {:.6}; rates {:.4} {:.4} over L {:?}",
            s.eps0,
            s.rate_n.r_squared,
            s.rate_d.r_squared,
            s.rate_n.rate,
            s.rate_d.rate,
            s.rate_d.window
        ),
    }
}

fn gap_persistence() -> Verdict {
    let spec = square_well();
    let s = truncation_sweep(&spec, &l_grid(), &SweepOptions::default()).unwrap();
    let v_inf = spec.build().unwrap().v_inf();
    let floor = 0.1 * (v_inf - s.eps0);
    let worst = s
        .lam2_n
        .iter()
        .chain(&s.lam2_d)
        .map(|l| l - s.eps0)
        .fold(f64::INFINITY, f64::min);
    Verdict {
        pass: worst > floor,
        detail: format!("min λ₂ − ε₀ = {worst:.5} vs 0.1(v∞ − ε₀) = {floor:.5}"),
    }
}

fn agmon() -> Verdict {
    let r = agmon_norms(
        &square_well(),
        0.5,
        1.0,
        &l_grid(),
        &SweepOptions::default(),
    )
    .unwrap();
    let max = r.weighted_norms.iter().copied().fold(0.0, f64::max);
    let min = r
        .weighted_norms
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let variation = (max - min) / min;
    let decays = r.tail_fit.fitted && r.tail_fit.rate > 0.0;
    Verdict {
        pass: variation < 0.5 && decays && r.tail_fit.r_squared > 0.95,
        detail: format!(
            "norms {min:.5}..{max:.5} (variation {:.2}%); tail rate {:.4} R² {:.6}",
            100.0 * variation,
            r.tail_fit.rate,
            r.tail_fit.r_squared
        ),
    }
}

fn kirsch_simon() -> Verdict {
    let window = [1e-8 * (1.0 - 1e-12), 1e-4 * (1.0 + 1e-12)];
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [0.5, 1.25, 2.0] {
        let curve =
            counting_curve(&RadialProblem::new(-c).with_grid(log_grid(1e-3, 1e-8, 8))).unwrap();
        let phase = fit_log_slope_window(&curve, SlopeTarget::Phase, window).unwrap();
        let count = fit_log_slope_window(&curve, SlopeTarget::Count, window).unwrap();
        let expected = kirsch_simon_slope(c);
        let err = rel(phase.slope, expected);
        pass &= err < 0.15;
        parts.push(format!(
            "c={c}: slope {:.4} vs {expected:.4} ({:+.1}%), integer N slope {:.4}",
            phase.slope,
            100.0 * (phase.slope - expected) / expected,
            count.slope
        ));
    }
    let critical =
        counting_curve(&RadialProblem::new(-0.25).with_grid(log_grid(1e-3, 1e-8, 8))).unwrap();
    let flat = fit_log_slope_window(&critical, SlopeTarget::Count, window).unwrap();
    pass &= flat.slope.abs() < 0.005;
    parts.push(format!("c=1/4: slope {:.4}", flat.slope));
    Verdict {
        pass,
        detail: parts.join("; "),
    }
}

fn assembled_slope(theta: f64) -> (f64, f64) {
    let curve = build_curve(&CurveSpec::latitude(theta), 1024).unwrap();
    let angular = angular_spectrum(&curve, 1024, 1.0).unwrap();
    let transverse = PotentialTransverse::new(&PotentialSpec::hard_wall(1.0), 1.0, 1025).unwrap();
    let params = ModelParams {
        variant: Variant::Lower,
        delta: 0.05,
        c_knob: 0.0,
        eps_knob: 0.0,
        r: None,
        k: None,
        e_grid: log_grid(1e-2, 1e-20, 6),
    };
    let model = assemble_model(&angular, sup_curvature(&curve), &transverse, &params).unwrap();
    (model.fit_phase.unwrap().slope, model.k_s)
}

fn assembled_model() -> Verdict {
    let (slope, k_s) = assembled_slope(PI / 4.0);
    let expected = 1.0 / (4.0 * PI);
    let err = rel(slope, expected);
    let (flat, _) = assembled_slope(FRAC_PI_2);
    Verdict {
        pass: err < 0.2 && flat.abs() < 0.005,
        detail: format!(
            "pi/4 slope {slope:.5} vs {expected:.5} ({:+.1}%, k_S {k_s:.5}); great circle slope {flat:.4}",
            100.0 * (slope - expected) / expected
        ),
    }
}

fn oracle_equivalence() -> Verdict {
    let shooting = common::sample(common::shooting_case(), 50);
    let outcomes: Vec<_> = shooting.iter().map(common::run_shooting_case).collect();
    let agree = outcomes.iter().filter(|o| o.agrees()).count();
    let exact = outcomes.iter().filter(|o| o.sturm == o.oscillation).count();
    let dense = common::sample(common::dense_case(), 20);
    let dense_match = dense
        .iter()
        .filter(|c| {
            let (sturm, full) = common::run_dense_case(c);
            sturm == full
        })
        .count();
    let max_n = dense.iter().map(|c| c.potential.len()).max().unwrap_or(0);
    Verdict {
        pass: agree == 50 && dense_match == 20 && max_n <= 400,
        detail: format!(
            "shooting {agree}/50 agree ({exact} exact); dense {dense_match}/20 exact (n ≤ {max_n})"
        ),
    }
}

#[test]
fn acceptance() {
    let mut results = Vec::new();

    let (v, t) = timed(|| {
        let (pass, detail) = ks_latitudes();
        Verdict { pass, detail }
    });
    results.push(report(
        1,
        "k_S closed form for latitudes (each < 1 s)",
        None,
        v,
        t,
    ));

    let (v, t) = timed(thresholds);
    results.push(report(2, "thresholds", Some(Duration::from_secs(5)), v, t));

    let (v, t) = timed(bracketing);
    results.push(report(
        3,
        "bracketing and rates",
        Some(Duration::from_secs(10)),
        v,
        t,
    ));

    let (v, t) = timed(gap_persistence);
    results.push(report(4, "gap persistence", None, v, t));

    let (v, t) = timed(agmon);
    results.push(report(5, "Agmon uniformity and tail decay", None, v, t));

    let (v, t) = timed(kirsch_simon);
    results.push(report(
        6,
        "inverse-square counting slope",
        Some(Duration::from_secs(60)),
        v,
        t,
    ));

    let (v, t) = timed(assembled_model);
    results.push(report(
        7,
        "assembled model slope",
        Some(Duration::from_secs(300)),
        v,
        t,
    ));

    let (v, t) = timed(oracle_equivalence);
    results.push(report(8, "oracle equivalence", None, v, t));

    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, p)| !**p)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
