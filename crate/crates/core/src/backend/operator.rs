use std::sync::Arc;

use super::FpFormat;
use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::rng::PhiloxStream;

/// Relative Gaussian noise on matvec outputs:
/// `y = A x + sigma · (‖A x‖ / √n) · g` with `g ~ N(0, I)`.
///
/// `g` for call `c` is read from the Philox stream `(seed, stream, c)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
    pub stream: u32,
}

impl NoiseModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!("noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { sigma, seed, stream: 0 })
    }

    pub fn with_stream(mut self, stream: u32) -> Self {
        self.stream = stream;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Exact,
    /// Operands are stored in the format, every product and every partial
    /// sum is rounded to it, rows accumulate left to right.
    Rounded(FpFormat),
    Noisy(NoiseModel),
}

/// A matrix behind a simulated matvec substrate.
///
/// The operator itself is immutable; noisy applications are addressed by an
/// explicit call index, so callers own the counter.
#[derive(Clone, Debug)]
pub struct LinearOperator {
    matrix: Arc<Matrix>,
    mode: Mode,
}

impl LinearOperator {
    pub fn new(matrix: Arc<Matrix>, mode: Mode) -> Self {
        Self { matrix, mode }
    }

    pub fn exact(matrix: Arc<Matrix>) -> Self {
        Self::new(matrix, Mode::Exact)
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Arc<Matrix> {
        &self.matrix
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Whether repeated applications to the same input can differ.
    pub fn is_stochastic(&self) -> bool {
        matches!(self.mode, Mode::Noisy(n) if n.sigma > 0.0)
    }

    /// Applies the operator. `call` selects the noise stream and is ignored
    /// by the deterministic modes.
    pub fn apply(&self, x: &[f64], call: u64) -> Result<Vec<f64>> {
        check_len(self.cols(), x.len())?;
        Ok(self.apply_unchecked(x, call))
    }

    pub(crate) fn apply_unchecked(&self, x: &[f64], call: u64) -> Vec<f64> {
        match self.mode {
            Mode::Exact => self.matrix.matvec_unchecked(x),
            Mode::Rounded(f) if f.is_binary64() => self.matrix.matvec_unchecked(x),
            Mode::Rounded(f) => rounded_matvec(&self.matrix, x, f),
            Mode::Noisy(noise) => {
                let mut y = self.matrix.matvec_unchecked(x);
                if noise.sigma == 0.0 {
                    return y;
                }
                let n = y.len();
                let amp = noise.sigma * norm2(&y) / (n as f64).sqrt();
                let mut rng = PhiloxStream::new(noise.seed, noise.stream, call);
                for yi in y.iter_mut() {
                    *yi += amp * rng.next_normal();
                }
                y
            }
        }
    }
}

/// Matvec with every operation rounded to `f`.
pub fn rounded_matvec(a: &Matrix, x: &[f64], f: FpFormat) -> Vec<f64> {
    let xr: Vec<f64> = x.iter().map(|v| f.round(*v)).collect();
    (0..a.rows())
        .map(|i| {
            let mut acc = 0.0;
            for (j, aij) in a.row_entries(i) {
                let p = f.round(f.round(aij) * xr[j]);
                acc = f.round(acc + p);
            }
            acc
        })
        .collect()
}

/// Owns the call counter for a sequence of applications of one operator.
#[derive(Debug)]
pub struct Applier<'a> {
    op: &'a LinearOperator,
    next_call: u64,
    count: usize,
}

impl<'a> Applier<'a> {
    pub fn new(op: &'a LinearOperator, first_call: u64) -> Self {
        Self { op, next_call: first_call, count: 0 }
    }

    pub fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.op.cols(), "operator dimension mismatch");
        let y = self.op.apply_unchecked(x, self.next_call);
        self.next_call += 1;
        self.count += 1;
        y
    }

    pub fn dim(&self) -> usize {
        self.op.rows()
    }

    pub fn matvecs(&self) -> usize {
        self.count
    }

    pub fn next_call(&self) -> u64 {
        self.next_call
    }

    pub fn operator(&self) -> &LinearOperator {
        self.op
    }
}
