//! Small symmetric solves for the k×k normal equations of the
//! multi-direction refinement step.

use super::DenseMatrix;
use crate::error::{check_len, Error, Result};

/// Largest Gram matrix accepted by [`spd_solve_small`].
pub const MAX_SMALL_DIM: usize = 64;

/// Eigenvalues below this fraction of the largest one are dropped by the
/// pseudoinverse fallback.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-12;

/// Eigen-decomposition of a symmetric matrix; `vectors` holds eigenvectors as
/// columns.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Solves `G c = rhs` for symmetric positive semidefinite `G`.
///
/// Cholesky is tried first. A pivot at or below `1e-12·max(diag G)` counts as
/// breakdown, after which the eigenvalue-thresholded pseudoinverse is used,
/// giving the minimum-norm least-squares solution. A 1×1 system is the plain
/// quotient `rhs / g` (zero when `g` is not positive).
pub fn spd_solve_small(g: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    check_small(g, rhs)?;
    let k = g.rows();
    if k == 1 {
        let g0 = g.get(0, 0);
        return Ok(vec![if g0 > 0.0 { rhs[0] / g0 } else { 0.0 }]);
    }
    match cholesky(g) {
        Some(l) => Ok(cholesky_solve(&l, rhs)),
        None => pinv_solve_small(g, rhs),
    }
}

/// Minimum-norm solution through the symmetric eigen-decomposition.
pub fn pinv_solve_small(g: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    check_small(g, rhs)?;
    let k = g.rows();
    let eig = symmetric_eigen(g)?;
    let lmax = eig.values.iter().cloned().fold(0.0, f64::max);
    let mut c = vec![0.0; k];
    if lmax <= 0.0 {
        return Ok(c);
    }
    let cutoff = PINV_RELATIVE_CUTOFF * lmax;
    for (p, &lam) in eig.values.iter().enumerate() {
        if lam <= cutoff {
            continue;
        }
        let mut proj = 0.0;
        for i in 0..k {
            proj += eig.vectors.get(i, p) * rhs[i];
        }
        let coef = proj / lam;
        for (i, ci) in c.iter_mut().enumerate() {
            *ci += coef * eig.vectors.get(i, p);
        }
    }
    Ok(c)
}

fn check_small(g: &DenseMatrix, rhs: &[f64]) -> Result<()> {
    check_len(g.rows(), g.cols())?;
    check_len(g.rows(), rhs.len())?;
    if g.rows() == 0 || g.rows() > MAX_SMALL_DIM {
        return Err(Error::InvalidInput(format!(
            "small solve needs 1 <= k <= {MAX_SMALL_DIM}, got {}",
            g.rows()
        )));
    }
    let tol = 1e-10 * g.norm_inf();
    if g.asymmetry() > tol {
        return Err(Error::InvalidInput("Gram matrix is not symmetric".into()));
    }
    Ok(())
}

fn cholesky(g: &DenseMatrix) -> Option<DenseMatrix> {
    let k = g.rows();
    let max_diag = (0..k).map(|i| g.get(i, i)).fold(0.0, f64::max);
    if max_diag <= 0.0 {
        return None;
    }
    let floor = PINV_RELATIVE_CUTOFF * max_diag;
    let mut l = DenseMatrix::zeros(k, k);
    for j in 0..k {
        let mut d = g.get(j, j);
        for p in 0..j {
            d -= l.get(j, p) * l.get(j, p);
        }
        if d <= floor || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l.set(j, j, ljj);
        for i in j + 1..k {
            let mut s = g.get(i, j);
            for p in 0..j {
                s -= l.get(i, p) * l.get(j, p);
            }
            l.set(i, j, s / ljj);
        }
    }
    Some(l)
}

fn cholesky_solve(l: &DenseMatrix, rhs: &[f64]) -> Vec<f64> {
    let k = l.rows();
    let mut y = rhs.to_vec();
    for i in 0..k {
        for p in 0..i {
            y[i] -= l.get(i, p) * y[p];
        }
        y[i] /= l.get(i, i);
    }
    for i in (0..k).rev() {
        for p in i + 1..k {
            y[i] -= l.get(p, i) * y[p];
        }
        y[i] /= l.get(i, i);
    }
    y
}

/// Cyclic Jacobi eigen-decomposition for small symmetric matrices.
pub fn symmetric_eigen(g: &DenseMatrix) -> Result<SymmetricEigen> {
    check_len(g.rows(), g.cols())?;
    let n = g.rows();
    let mut a = g.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = g.norm_fro();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    a.set(r, p, c * arp - s * arq);
                    a.set(r, q, s * arp + c * arq);
                }
                for r in 0..n {
                    let apr = a.get(p, r);
                    let aqr = a.get(q, r);
                    a.set(p, r, c * apr - s * aqr);
                    a.set(q, r, s * apr + c * aqr);
                }
                for r in 0..n {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, c * vrp - s * vrq);
                    v.set(r, q, s * vrp + c * vrq);
                }
            }
        }
    }
    Ok(SymmetricEigen {
        values: (0..n).map(|i| a.get(i, i)).collect(),
        vectors: v,
    })
}
