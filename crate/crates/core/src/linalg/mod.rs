//! Real-valued linear algebra primitives.
//!
//! Everything here is binary64. Reduced precision and noise are modelled
//! only in [`crate::backend`].

mod cond;
mod dense;
mod lu;
mod matrix;
mod qr;
mod small;
mod sparse;

use std::ops::Deref;

pub use cond::{cond_estimate, norm2_estimate};
pub use dense::DenseMatrix;
pub use lu::{dense_solve, LuDecomposition};
pub use matrix::{Matrix, RowEntries};
pub use qr::{householder_qr, random_orthogonal};
pub use small::{pinv_solve_small, spd_solve_small, symmetric_eigen, SymmetricEigen, MAX_SMALL_DIM};
pub use sparse::SparseCsr;

use crate::error::{check_len, Error, Result};

/// Pivot magnitudes below this are treated as exact zeros.
pub const SINGULAR_PIVOT: f64 = 1e-300;

/// A nonempty vector of finite binary64 entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidInput("vector must have at least one entry".into()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("vector entry {i} is not finite")));
        }
        Ok(Self(data))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n.max(1)])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n.max(1)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

/// Inner product `xᵀy`, accumulated left to right.
pub fn dot(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len())?;
    Ok(vdot(x, y))
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    vdot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[inline]
pub(crate) fn vdot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut s = 0.0;
    for (a, b) in x.iter().zip(y) {
        s += a * b;
    }
    s
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub(crate) fn scale(alpha: f64, x: &mut [f64]) {
    for v in x {
        *v *= alpha;
    }
}


pub(crate) fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}
