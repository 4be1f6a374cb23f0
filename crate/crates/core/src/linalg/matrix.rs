use super::{DenseMatrix, SparseCsr};
use crate::error::{check_len, Result};

/// Either storage scheme; what the solvers and operators hold.
#[derive(Clone, Debug, PartialEq)]
pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(SparseCsr),
}

/// Stored `(column, value)` pairs of one row, in increasing column order.
pub enum RowEntries<'a> {
    Dense(std::iter::Enumerate<std::slice::Iter<'a, f64>>),
    Sparse(std::iter::Zip<std::slice::Iter<'a, usize>, std::slice::Iter<'a, f64>>),
}

impl Iterator for RowEntries<'_> {
    type Item = (usize, f64);

    #[inline]
    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            RowEntries::Dense(it) => it.next().map(|(j, v)| (j, *v)),
            RowEntries::Sparse(it) => it.next().map(|(j, v)| (*j, *v)),
        }
    }
}

impl Matrix {
    pub fn rows(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.rows(),
            Matrix::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.cols(),
            Matrix::Sparse(m) => m.cols(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn row_entries(&self, i: usize) -> RowEntries<'_> {
        match self {
            Matrix::Dense(m) => RowEntries::Dense(m.row(i).iter().enumerate()),
            Matrix::Sparse(m) => {
                let (c, v) = m.row(i);
                RowEntries::Sparse(c.iter().zip(v.iter()))
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols(), x.len())?;
        Ok(self.matvec_unchecked(x))
    }

    pub(crate) fn matvec_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Matrix::Dense(m) => m.matvec_unchecked(x),
            Matrix::Sparse(m) => m.matvec_unchecked(x),
        }
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows(), x.len())?;
        let mut y = vec![0.0; self.cols()];
        for (i, xi) in x.iter().enumerate() {
            for (j, a) in self.row_entries(i) {
                y[j] += a * xi;
            }
        }
        Ok(y)
    }

    /// `|A| |x|`, used by componentwise backward errors.
    pub fn abs_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols(), x.len())?;
        Ok((0..self.rows())
            .map(|i| self.row_entries(i).map(|(j, a)| (a * x[j]).abs()).sum())
            .collect())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Matrix::Dense(m) => m.clone(),
            Matrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Matrix::Dense(m) => m.max_abs(),
            Matrix::Sparse(m) => m.max_abs(),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.rows())
            .map(|i| self.row_entries(i).map(|(_, a)| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, alpha: f64) -> Matrix {
        match self {
            Matrix::Dense(m) => Matrix::Dense(m.scaled(alpha)),
            Matrix::Sparse(m) => Matrix::Sparse(m.scaled(alpha)),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Matrix::Dense(m) => m.get(i, j),
            Matrix::Sparse(m) => m.get(i, j),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        (0..self.rows()).all(|i| self.row_entries(i).all(|(j, a)| self.get(j, i) == a))
    }
}

impl From<DenseMatrix> for Matrix {
    fn from(m: DenseMatrix) -> Self {
        Matrix::Dense(m)
    }
}

impl From<SparseCsr> for Matrix {
    fn from(m: SparseCsr) -> Self {
        Matrix::Sparse(m)
    }
}
