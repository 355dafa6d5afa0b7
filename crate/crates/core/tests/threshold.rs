use std::f64::consts::PI;

use conebound::threshold::{
    agmon_norms, agmon_weight, compute_threshold, truncation_sweep, write_sweep_csv, PotentialSpec,
    SweepOptions,
};
use conebound::Error;

/// Even ground state of the depth-4, half-width-1 well:
/// `√(−E) = √(4+E)·tan √(4+E)`, solved for `k = √(4+E) ∈ (0, π/2)`.
fn square_well_root() -> f64 {
    let g = |k: f64| (4.0 - k * k).sqrt() - k * k.tan();
    let (mut lo, mut hi) = (1e-9, PI / 2.0 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    k * k - 4.0
}

fn l_grid(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(f64::from).collect()
}

#[test]
fn hard_wall_threshold() {
    let r = compute_threshold(&PotentialSpec::hard_wall(1.0), 1.0, 1025).unwrap();
    let exact = PI * PI / 4.0;
    assert!(((r.eps0 - exact) / exact).abs() < 1e-5, "{}", r.eps0);
    assert!(r.satisfied_iii);
    assert!(r.v_inf.is_infinite());
}

#[test]
fn square_well_matches_transcendental_root() {
    let exact = square_well_root();
    let r = compute_threshold(&PotentialSpec::square_well(4.0, 1.0), 12.0, 4097).unwrap();
    println!("eps0 {} exact {exact} err {}", r.eps0, r.eps0 - exact);
    assert!((r.eps0 - exact).abs() < 1e-4);
    let [lo, hi] = r.enclosure.unwrap();
    assert!(lo <= r.eps0 + r.eps0_error && r.eps0 - r.eps0_error <= hi);
    assert!(r.gap > 0.0 && r.satisfied_iii);
}

#[test]
fn delta_regularization_limit() {
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|w| {
            let r = compute_threshold(&PotentialSpec::delta_approx(2.0, *w), 10.0, 8193).unwrap();
            r.eps0 + 1.0
        })
        .collect();
    println!("delta errors {errs:?}");
    assert!(errs[2].abs() < 0.02);
    for pair in errs.windows(2) {
        assert!(pair[1].abs() < pair[0].abs());
        let order = (pair[0] / pair[1]).abs().log2();
        assert!((0.9..=1.1).contains(&order), "order {order}");
    }
}

#[test]
fn harmonic_oscillator_ground_energy() {
    let r = compute_threshold(&PotentialSpec::confining(2.0), 8.0, 2049).unwrap();
    assert!((r.eps0 - 1.0).abs() < 1e-6, "{}", r.eps0);
    let sweep = truncation_sweep(
        &PotentialSpec::confining(2.0),
        &l_grid(2, 6),
        &SweepOptions::default(),
    )
    .unwrap();
    let last = *sweep.lam1_d.last().unwrap();
    assert!((last - 1.0).abs() < 1e-3);
    assert!((sweep.lam1_d[0] - 1.0).abs() > (last - 1.0).abs());
}

#[test]
fn square_well_sweep_brackets_and_decays() {
    let spec = PotentialSpec::square_well(4.0, 1.0);
    let sweep = truncation_sweep(&spec, &l_grid(4, 14), &SweepOptions::default()).unwrap();
    for i in 0..sweep.l_grid.len() {
        assert!(sweep.lam1_n[i] <= sweep.eps0 && sweep.eps0 <= sweep.lam1_d[i]);
        assert!(sweep.lam2_n[i] <= sweep.lam2_d[i] && sweep.lam1_n[i] <= sweep.lam1_d[i]);
    }
    assert_eq!(sweep.l_min, Some(4.0));
    for w in sweep.lam1_d.windows(2) {
        assert!(w[1] <= w[0]);
    }
    let theory = 2.0 * (-square_well_root()).sqrt();
    for fit in [&sweep.rate_n, &sweep.rate_d] {
        println!("{fit:?} theory {theory}");
        assert!(fit.fitted && fit.r_squared > 0.99);
        assert!((fit.rate - theory).abs() < 0.25 * theory);
    }
    let eps0 = sweep.eps0;
    assert!(sweep.gap_delta > 0.1 * (0.0 - eps0));
}

#[test]
fn sweep_rejects_short_grid_and_hard_wall() {
    let opts = SweepOptions::default();
    assert!(matches!(
        truncation_sweep(
            &PotentialSpec::square_well(4.0, 1.0),
            &[4.0, 5.0, 6.0],
            &opts
        ),
        Err(Error::Precondition(_))
    ));
    assert!(truncation_sweep(&PotentialSpec::hard_wall(1.0), &l_grid(4, 8), &opts).is_err());
}

#[test]
fn agmon_weight_closed_forms() {
    let spec = PotentialSpec::square_well(4.0, 1.0);
    let v = spec.build().unwrap();
    let eps0 = square_well_root();
    let xs = [-3.0, -1.5, -0.5, 0.0, 0.7, 1.0, 2.0, 5.0];
    let phi = agmon_weight(v.as_ref(), eps0, 1.0, &xs).unwrap();
    for (x, p) in xs.iter().zip(&phi) {
        let expected = (-eps0).sqrt() * (x.abs() - 1.0).max(0.0);
        assert!((p - expected).abs() < 1e-12, "x={x}");
    }
    // the well floor lies below ε₀ only for ε₀ < −4, so probe with a higher level
    let err = agmon_weight(v.as_ref(), -3.99, 0.5, &xs).unwrap_err();
    assert!(
        matches!(err, Error::Precondition(ref m) if m.contains("0.7")),
        "{err}"
    );
}

#[test]
fn agmon_norms_are_uniform_and_tails_decay() {
    let spec = PotentialSpec::square_well(4.0, 1.0);
    let opts = SweepOptions::default();
    let flat = agmon_norms(&spec, 0.0, 1.0, &l_grid(6, 14), &opts).unwrap();
    for w in &flat.weighted_norms {
        assert!((w - 1.0).abs() < 1e-10);
    }
    let report = agmon_norms(&spec, 0.5, 1.0, &l_grid(6, 14), &opts).unwrap();
    println!("{:?} tail {:?}", report.weighted_norms, report.tail_fit);
    let max = report.weighted_norms.iter().cloned().fold(0.0, f64::max);
    let min = report
        .weighted_norms
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert!(max / min < 1.5);
    assert!(report.kendall_tau <= 0.5);
    assert!(report.tail_fit.rate > 0.0 && report.tail_fit.r_squared > 0.95);
    for w in report.phi_samples.windows(2).zip(report.phi_x.windows(2)) {
        if w.1[0] >= 0.0 {
            assert!(w.0[1] >= w.0[0]);
        }
    }

    let sweep = truncation_sweep(&spec, &l_grid(6, 14), &opts).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&sweep, Some(&report), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("L,lam1_N,lam1_D,lam2_N,lam2_D,agmon_norm,tail_norm\n"));
    assert_eq!(text.lines().count(), 10);
}
