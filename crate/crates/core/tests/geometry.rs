use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

use conebound::geometry::{build_curve, sup_curvature, CurveSpec, SampledCurve};
use nalgebra::{Rotation3, Vector3};

fn perturbed(n: usize) -> SampledCurve {
    build_curve(&CurveSpec::perturbed_latitude(FRAC_PI_4, 0.05, 3), n).unwrap()
}

#[test]
fn latitude_closed_forms() {
    for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, FRAC_PI_2] {
        let c = build_curve(&CurveSpec::latitude(theta), 1024).unwrap();
        assert!((c.length - 2.0 * PI * theta.sin()).abs() < 1e-12);
        let cot = theta.cos() / theta.sin();
        assert!(
            c.kappa.iter().all(|k| (k - cot).abs() < 1e-8),
            "theta {theta}"
        );
        assert!((sup_curvature(&c) - cot).abs() < 1e-8);
    }
    let c = build_curve(&CurveSpec::latitude(FRAC_PI_6), 1024).unwrap();
    assert!((sup_curvature(&c) - 3f64.sqrt()).abs() < 1e-8);
}

#[test]
fn perturbed_mean_curvature_against_fine_reference() {
    let c = perturbed(1024);
    let reference = perturbed(8192);
    let mean = c.mean_kappa();
    assert!((mean - 1.0).abs() < 0.02, "mean kappa {mean}");
    assert!((mean - reference.mean_kappa()).abs() < 1e-8);
    let spread = c.kappa.iter().fold(0.0f64, |m, k| m.max((k - mean).abs()));
    assert!(spread > 0.05, "curvature should vary, spread {spread}");
    assert!((c.length - reference.length).abs() < 1e-12 * c.length);
}

#[test]
fn curvature_converges_at_least_second_order() {
    // the reference sits on every 8th sample of the finest grid
    let reference = perturbed(2048);
    let err = |n: usize| {
        let c = perturbed(n);
        let stride = 2048 / n;
        c.kappa
            .iter()
            .enumerate()
            .map(|(i, k)| (k - reference.kappa[i * stride]).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(128), err(256));
    assert!(e1 / e2 > 4.0 * 0.8, "ratio {}", e1 / e2);
}

#[test]
fn frame_is_orthonormal() {
    let c = perturbed(1024);
    let h = c.spacing();
    let n = c.len();
    for i in 0..n {
        let g = Vector3::from(c.gamma[i]);
        let nv = Vector3::from(c.normal[i]);
        let p = |k: usize| Vector3::from(c.gamma[(i + n + k - 2) % n]);
        let t = (p(0) - p(1) * 8.0 + p(3) * 8.0 - p(4)) / (12.0 * h);
        assert!((g.norm() - 1.0).abs() < 1e-6);
        assert!((nv.norm() - 1.0).abs() < 1e-6);
        assert!(g.dot(&nv).abs() < 1e-6);
        assert!(t.dot(&nv).abs() < 1e-6);
        assert!((t.norm() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn geodesic_chords_add_up_to_length() {
    for spec in [
        CurveSpec::latitude(FRAC_PI_2),
        CurveSpec::latitude(FRAC_PI_6),
        CurveSpec::latitude(FRAC_PI_3),
        CurveSpec::latitude(FRAC_PI_4),
        CurveSpec::perturbed_latitude(FRAC_PI_4, 0.05, 3),
    ] {
        let c = build_curve(&spec, 1024).unwrap();
        let rel = (c.extrapolated_chord_length() - c.length).abs() / c.length;
        assert!(rel < 1e-6, "{spec:?}: {rel:e}");
        // the raw polygon falls short by about h²·mean(κ²)/24
        let h = c.spacing();
        let deficit = h * h * c.kappa_squared_integral() / (24.0 * c.length);
        let raw = (c.length - c.geodesic_chord_length()) / c.length;
        assert!(
            (raw - deficit).abs() < 0.05 * deficit + 1e-12,
            "{raw:e} vs {deficit:e}"
        );
    }
}

#[test]
fn curvature_is_rotation_invariant() {
    let c = perturbed(512);
    let r = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
    let rc = c.rotated(&r);
    for (a, b) in c.kappa.iter().zip(&rc.kappa) {
        assert!((a - b).abs() < 1e-9);
    }
    assert_eq!(c.length, rc.length);
}

#[test]
fn curvature_is_periodic() {
    let c = perturbed(1024);
    let n = c.len();
    let jump = (c.kappa[0] - c.kappa[n - 1]).abs();
    let step = c
        .kappa
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    assert!(jump <= 1.01 * step);
}

#[test]
fn tabulated_latitude_reproduces_preset() {
    let preset = build_curve(&CurveSpec::latitude(FRAC_PI_4), 256).unwrap();
    let table = build_curve(&CurveSpec::tabulated(&preset.gamma), 256).unwrap();
    assert!((table.length - preset.length).abs() < 1e-3 * preset.length);
    assert!((table.mean_kappa() - 1.0).abs() < 0.05);
}

#[test]
fn off_sphere_tabulated_input_rejected() {
    let mut pts = build_curve(&CurveSpec::latitude(FRAC_PI_2), 64)
        .unwrap()
        .gamma;
    pts[10] = [pts[10][0] * 1.001, pts[10][1] * 1.001, pts[10][2] * 1.001];
    assert!(build_curve(&CurveSpec::tabulated(&pts), 128).is_err());
}
