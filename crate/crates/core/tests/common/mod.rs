//! Shared helpers for the integration tests: random data, nalgebra oracles
//! and scripted basic methods.
#![allow(dead_code)]

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use stableir::krylov::{BasicMethod, InnerSolve, InnerSolveStats};
use stableir::linalg::{DenseMatrix, Matrix};
use stableir::rng::PhiloxStream;

/// Stream domain reserved for test data.
pub const TEST_DOMAIN: u32 = 0x7e57_0000;

pub fn rng(seed: u64) -> PhiloxStream {
    PhiloxStream::new(seed, TEST_DOMAIN, 0)
}

pub fn gaussian_vec(n: usize, rng: &mut PhiloxStream) -> Vec<f64> {
    (0..n).map(|_| rng.next_normal()).collect()
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut PhiloxStream) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.next_normal())
}

/// `B Bᵀ + n I` for Gaussian `B`.
pub fn random_spd(n: usize, rng: &mut PhiloxStream) -> DenseMatrix {
    let b = gaussian_matrix(n, n, rng);
    let mut a = b.matmul(&b.transpose()).unwrap();
    for i in 0..n {
        a.set(i, i, a.get(i, i) + n as f64);
    }
    for i in 0..n {
        for j in 0..i {
            let v = a.get(i, j);
            a.set(j, i, v);
        }
    }
    a
}

/// Gaussian matrix shifted by `2√n I` so it is comfortably nonsingular.
pub fn random_nonsymmetric(n: usize, rng: &mut PhiloxStream) -> DenseMatrix {
    let mut a = gaussian_matrix(n, n, rng);
    for i in 0..n {
        a.set(i, i, a.get(i, i) + 2.0 * (n as f64).sqrt());
    }
    a
}

pub fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.data())
}

pub fn from_na(a: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// 2-norm condition number from the singular values.
pub fn cond2(a: &DenseMatrix) -> f64 {
    let s = to_na(a).singular_values();
    s.max() / s.min()
}

pub fn norm2_na(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().max()
}

/// Least squares `argmin ‖W c − r‖` through Householder QR of `W`.
pub fn qr_lstsq(w: &DMatrix<f64>, r: &[f64]) -> Vec<f64> {
    let qr = w.clone().qr();
    let qtr = qr.q().transpose() * DVector::from_column_slice(r);
    let c = qr.r().solve_upper_triangular(&qtr).expect("full column rank");
    c.iter().copied().collect()
}

pub fn na_solve(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let x = to_na(a).lu().solve(&DVector::from_column_slice(b)).expect("nonsingular");
    x.iter().copied().collect()
}

pub fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn diff(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn stats() -> InnerSolveStats {
    InnerSolveStats { iterations: 1, relres: f64::NAN, matvecs: 1, breakdown: false }
}

/// Returns `M r` for a fixed matrix `M`.
pub struct LinearInner {
    pub m: DMatrix<f64>,
}

impl BasicMethod for LinearInner {
    fn solve(&mut self, r: &[f64]) -> InnerSolve {
        let d = &self.m * DVector::from_column_slice(r);
        InnerSolve { d: d.iter().copied().collect(), stats: stats() }
    }

    fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn name(&self) -> String {
        "linear".into()
    }
}

/// Hands out prepared directions in order, then zero vectors.
pub struct Scripted {
    pub n: usize,
    pub queue: VecDeque<Vec<f64>>,
}

impl BasicMethod for Scripted {
    fn solve(&mut self, _r: &[f64]) -> InnerSolve {
        let d = self.queue.pop_front().unwrap_or_else(|| vec![0.0; self.n]);
        InnerSolve { d, stats: stats() }
    }

    fn is_stochastic(&self) -> bool {
        true
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn name(&self) -> String {
        "scripted".into()
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Attack {
    /// Gaussian vector scaled like the residual, unrelated to `A`.
    Noise,
    /// `−A⁻¹ r`.
    SignFlip,
    Zero,
    /// `A⁻¹ r` plus a huge Gaussian perturbation.
    Swamped,
    /// Picks one of the others at random on each call.
    Mixed,
}

/// Deliberately unhelpful inner solver.
pub struct Adversary {
    pub a_inv: DMatrix<f64>,
    pub attack: Attack,
    pub rng: PhiloxStream,
}

impl Adversary {
    pub fn new(a: &DenseMatrix, attack: Attack, seed: u64) -> Self {
        let a_inv = to_na(a).try_inverse().expect("nonsingular");
        Self { a_inv, attack, rng: rng(seed) }
    }
}

impl BasicMethod for Adversary {
    fn solve(&mut self, r: &[f64]) -> InnerSolve {
        let n = r.len();
        let scale = l2(r).max(1e-300);
        let exact: Vec<f64> = (&self.a_inv * DVector::from_column_slice(r)).iter().copied().collect();
        let attack = match self.attack {
            Attack::Mixed => match self.rng.next_u32() % 4 {
                0 => Attack::Noise,
                1 => Attack::SignFlip,
                2 => Attack::Zero,
                _ => Attack::Swamped,
            },
            a => a,
        };
        let d = match attack {
            Attack::Noise => (0..n).map(|_| scale * self.rng.next_normal()).collect(),
            Attack::SignFlip => exact.iter().map(|v| -v).collect(),
            Attack::Zero => vec![0.0; n],
            Attack::Swamped => exact.iter().map(|v| v + 1e6 * scale * self.rng.next_normal()).collect(),
            Attack::Mixed => unreachable!(),
        };
        InnerSolve { d, stats: stats() }
    }

    fn is_stochastic(&self) -> bool {
        true
    }

    fn dim(&self) -> usize {
        self.a_inv.nrows()
    }

    fn name(&self) -> String {
        format!("adversary-{:?}", self.attack)
    }
}

pub fn dense(a: DenseMatrix) -> Matrix {
    Matrix::Dense(a)
}
