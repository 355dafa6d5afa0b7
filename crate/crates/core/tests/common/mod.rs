//! Randomized oracle instances shared by the spectral and acceptance suites.

#![allow(dead_code)]

use std::f64::consts::PI;

use conebound::spectral1d::{
    assemble, count_below, lowest_eigenvalues, oscillation_count, BoundaryKind, EndCondition,
    Grid1D, Operator1D,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

/// Smooth potential `Σ cₖ cos(kπx/b + φₖ)` on `(0, b)`.
#[derive(Debug, Clone)]
pub struct ShootingCase {
    pub length: f64,
    pub coeffs: Vec<(f64, f64)>,
    /// Neumann at both ends, otherwise Dirichlet.
    pub neumann: bool,
    /// Energy as a fraction of the way from `min V` to `min V + 300/b²`.
    pub level: f64,
}

impl ShootingCase {
    pub fn potential(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, (c, phase))| c * ((k + 1) as f64 * PI * x / self.length + phase).cos())
            .sum()
    }

    fn energy(&self) -> f64 {
        let vmin = (0..=400)
            .map(|i| self.potential(self.length * i as f64 / 400.0))
            .fold(f64::INFINITY, f64::min);
        vmin + self.level * 300.0 / (self.length * self.length)
    }
}

pub fn shooting_case() -> impl Strategy<Value = ShootingCase> {
    (
        1.0..4.0f64,
        prop::collection::vec((-40.0..40.0f64, 0.0..(2.0 * PI)), 1..4),
        any::<bool>(),
        0.0..1.0f64,
    )
        .prop_map(|(length, coeffs, neumann, level)| ShootingCase {
            length,
            coeffs,
            neumann,
            level,
        })
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingOutcome {
    pub sturm: usize,
    pub oscillation: usize,
    /// Some discrete eigenvalue lies within its discretization error of `E`.
    pub near_collision: bool,
}

impl ShootingOutcome {
    pub fn agrees(&self) -> bool {
        self.sturm == self.oscillation
            || (self.near_collision && self.sturm.abs_diff(self.oscillation) <= 1)
    }
}

/// Counts of one case by LDLᵀ inertia on an 800-point grid and by Prüfer
/// shooting on the continuous problem.
pub fn run_shooting_case(case: &ShootingCase) -> ShootingOutcome {
    let kind = if case.neumann {
        BoundaryKind::Neumann
    } else {
        BoundaryKind::Dirichlet
    };
    let end = if case.neumann {
        EndCondition::Neumann
    } else {
        EndCondition::Dirichlet
    };
    let energy = case.energy();
    let grid = Grid1D::new(kind, 0.0, case.length, 800).unwrap();
    let op = assemble(&grid.sample(|x| case.potential(x)), &grid).unwrap();
    let sturm = count_below(&op, energy);
    let v = |x: f64| case.potential(x);
    let oscillation = oscillation_count(&v, 0.0, case.length, end, end, energy, &[]).unwrap();
    let eig = lowest_eigenvalues(&op, (sturm + 2).min(op.len())).unwrap();
    let errs = eig.richardson_error.clone().unwrap();
    let near_collision = eig
        .values
        .iter()
        .zip(&errs)
        .any(|(l, e)| (l - energy).abs() < 4.0 * e.abs() + 1e-8);
    ShootingOutcome {
        sturm,
        oscillation,
        near_collision,
    }
}

/// Random tridiagonal (optionally cyclic) operator and a counting level.
#[derive(Debug, Clone)]
pub struct DenseCase {
    pub kind: BoundaryKind,
    pub potential: Vec<f64>,
    pub level: f64,
}

pub fn dense_case() -> impl Strategy<Value = DenseCase> {
    (
        prop_oneof![
            Just(BoundaryKind::Dirichlet),
            Just(BoundaryKind::Neumann),
            Just(BoundaryKind::Periodic)
        ],
        prop::collection::vec(-50.0..50.0f64, 16..=400),
        0.0..1.0f64,
    )
        .prop_map(|(kind, potential, t)| {
            let level = -50.0 + t * 250.0;
            DenseCase {
                kind,
                potential,
                level,
            }
        })
}

pub fn dense_operator(case: &DenseCase) -> Operator1D {
    let n = case.potential.len();
    let grid = Grid1D::new(case.kind, 0.0, 1.0, n).unwrap();
    assemble(&case.potential, &grid).unwrap()
}

/// `(inertia count, full-diagonalization count)`.
pub fn run_dense_case(case: &DenseCase) -> (usize, usize) {
    let op = dense_operator(case);
    let n = op.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = op.diag[i];
    }
    for i in 0..n - 1 {
        m[(i, i + 1)] = op.offdiag[i];
        m[(i + 1, i)] = op.offdiag[i];
    }
    if case.kind == BoundaryKind::Periodic {
        m[(0, n - 1)] += op.corner;
        m[(n - 1, 0)] += op.corner;
    }
    let shifted = case.level + 1e-12 * case.level.abs().max(1.0);
    let dense = m
        .symmetric_eigenvalues()
        .iter()
        .filter(|l| **l <= shifted)
        .count();
    (count_below(&op, case.level), dense)
}

/// Draws `count` values from a strategy with a fixed seed.
pub fn sample<S: Strategy>(strategy: S, count: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::new_with_rng(
        Config::default(),
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    (0..count)
        .map(|_| strategy.new_tree(&mut runner).unwrap().current())
        .collect()
}
