//! Orthogonalisation kernels shared by the Krylov methods.

use crate::backend::Applier;
use crate::linalg::{axpy, norm2, scale, vdot};

/// Projection norms above this fraction of the incoming vector's norm trigger
/// a second Gram–Schmidt pass.
pub const REORTH_THRESHOLD: f64 = 0.7;

/// Relative size of the new basis coefficient below which the Krylov space
/// is taken to be invariant (happy breakdown).
pub const HAPPY_RTOL: f64 = 1e-15;

/// Result of orthogonalising one new vector against a basis.
#[derive(Clone, Debug)]
pub struct ArnoldiStep {
    /// Projection coefficients `h[0..=j]`.
    pub coeffs: Vec<f64>,
    /// Norm of the orthogonalised remainder, `h[j+1][j]`.
    pub next_norm: f64,
    /// The normalised new basis vector; `None` on happy breakdown.
    pub next: Option<Vec<f64>>,
    pub reorthogonalized: bool,
}

/// Modified Gram–Schmidt of `w` against `basis`, with one reorthogonalisation
/// pass when `‖Vᵀw‖ > 0.7·‖w‖`.
pub fn arnoldi_step(basis: &[Vec<f64>], mut w: Vec<f64>) -> ArnoldiStep {
    let w_norm = norm2(&w);
    let mut coeffs = vec![0.0; basis.len()];
    for (h, v) in coeffs.iter_mut().zip(basis) {
        *h = vdot(v, &w);
        axpy(-*h, v, &mut w);
    }
    let reorthogonalized = norm2(&coeffs) > REORTH_THRESHOLD * w_norm;
    if reorthogonalized {
        for (h, v) in coeffs.iter_mut().zip(basis) {
            let c = vdot(v, &w);
            axpy(-c, v, &mut w);
            *h += c;
        }
    }
    let next_norm = norm2(&w);
    let next = if next_norm > HAPPY_RTOL * w_norm && next_norm > super::BREAKDOWN {
        scale(1.0 / next_norm, &mut w);
        Some(w)
    } else {
        None
    };
    ArnoldiStep { coeffs, next_norm, next, reorthogonalized }
}

/// One symmetric Lanczos step: given `w = A v_j`, orthogonalise against
/// `v_{j-1}` (weight `beta_j`) and `v_j`.
///
/// Returns `(alpha_j, beta_{j+1}, v_{j+1})`.
pub fn lanczos_step(
    v_prev: Option<&[f64]>,
    v: &[f64],
    beta: f64,
    mut w: Vec<f64>,
) -> (f64, f64, Option<Vec<f64>>) {
    let w_norm = norm2(&w);
    if let Some(vp) = v_prev {
        axpy(-beta, vp, &mut w);
    }
    let mut alpha = vdot(v, &w);
    axpy(-alpha, v, &mut w);
    // second local pass against the two most recent vectors
    let proj = if v_prev.is_some() { beta.hypot(alpha) } else { alpha.abs() };
    if proj > REORTH_THRESHOLD * w_norm {
        if let Some(vp) = v_prev {
            let c = vdot(vp, &w);
            axpy(-c, vp, &mut w);
        }
        let c = vdot(v, &w);
        axpy(-c, v, &mut w);
        alpha += c;
    }
    let beta_next = norm2(&w);
    let next = if beta_next > HAPPY_RTOL * w_norm && beta_next > super::BREAKDOWN {
        scale(1.0 / beta_next, &mut w);
        Some(w)
    } else {
        None
    };
    (alpha, beta_next, next)
}

/// Orthonormal Krylov basis and Hessenberg matrix after up to `steps`
/// Arnoldi steps from `r`. `h[i][j]` is stored as `h[j][i]` (column-wise).
#[derive(Clone, Debug)]
pub struct ArnoldiDecomposition {
    pub basis: Vec<Vec<f64>>,
    pub hessenberg_columns: Vec<Vec<f64>>,
}

pub fn arnoldi(ap: &mut Applier<'_>, r: &[f64], steps: usize) -> ArnoldiDecomposition {
    let mut v0 = r.to_vec();
    let beta = norm2(&v0);
    scale(1.0 / beta, &mut v0);
    let mut basis = vec![v0];
    let mut cols = Vec::new();
    for j in 0..steps {
        let w = ap.apply(&basis[j]);
        let step = arnoldi_step(&basis, w);
        let mut col = step.coeffs;
        col.push(step.next_norm);
        cols.push(col);
        match step.next {
            Some(v) => basis.push(v),
            None => break,
        }
    }
    ArnoldiDecomposition { basis, hessenberg_columns: cols }
}

/// Lanczos tridiagonal coefficients `(alphas, betas)` after up to `steps`
/// steps from `r`; `betas[j]` couples `v_j` and `v_{j+1}`.
pub fn lanczos(ap: &mut Applier<'_>, r: &[f64], steps: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = r.to_vec();
    scale(1.0 / norm2(&v), &mut v);
    let mut v_prev: Option<Vec<f64>> = None;
    let mut beta = 0.0;
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    for _ in 0..steps {
        let w = ap.apply(&v);
        let (alpha, beta_next, next) = lanczos_step(v_prev.as_deref(), &v, beta, w);
        alphas.push(alpha);
        betas.push(beta_next);
        match next {
            Some(vn) => {
                v_prev = Some(std::mem::replace(&mut v, vn));
                beta = beta_next;
            }
            None => break,
        }
    }
    (alphas, betas)
}
