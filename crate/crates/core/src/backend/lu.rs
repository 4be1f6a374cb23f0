use super::FpFormat;
use crate::error::{check_len, Error, Result};
use crate::linalg::DenseMatrix;

/// Partial-pivoted LU with every stored value and every arithmetic result
/// rounded to `format`.
#[derive(Clone, Debug)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    format: FpFormat,
}

/// Factors `P A = L U` in the given format.
pub fn lu_factor_lowprec(a: &DenseMatrix, f: FpFormat) -> Result<LuFactors> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
    }
    let n = a.rows();
    let mut lu: Vec<f64> = a.data().iter().map(|v| f.round(*v)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if lu[i * n + k].abs() > lu[p * n + k].abs() {
                p = i;
            }
        }
        let pivot = lu[p * n + k];
        if pivot == 0.0 {
            return Err(Error::SingularMatrix { step: k, pivot });
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        for i in k + 1..n {
            let l = f.round(lu[i * n + k] / pivot);
            lu[i * n + k] = l;
            if l == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let prod = f.round(l * lu[k * n + j]);
                lu[i * n + j] = f.round(lu[i * n + j] - prod);
            }
        }
    }
    Ok(LuFactors { n, lu, perm, format: f })
}

/// Forward and back substitution with every operation rounded to `f`.
pub fn lu_solve(fac: &LuFactors, r: &[f64], f: FpFormat) -> Result<Vec<f64>> {
    check_len(fac.n, r.len())?;
    let n = fac.n;
    let lu = &fac.lu;
    let mut y: Vec<f64> = fac.perm.iter().map(|&p| f.round(r[p])).collect();
    for i in 0..n {
        let mut s = y[i];
        for j in 0..i {
            s = f.round(s - f.round(lu[i * n + j] * y[j]));
        }
        y[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s = f.round(s - f.round(lu[i * n + j] * y[j]));
        }
        y[i] = f.round(s / lu[i * n + i]);
    }
    Ok(y)
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn format(&self) -> FpFormat {
        self.format
    }

    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        lu_solve(self, r, self.format)
    }

    pub fn l(&self) -> DenseMatrix {
        let n = self.n;
        DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[i * n + j],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => 0.0,
        })
    }

    pub fn u(&self) -> DenseMatrix {
        let n = self.n;
        DenseMatrix::from_fn(n, n, |i, j| if j >= i { self.lu[i * n + j] } else { 0.0 })
    }

    /// `perm[k]` is the original row placed at position `k`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }
}
