use super::DenseMatrix;
use crate::error::{check_len, Error, Result};

/// Compressed sparse row storage.
///
/// Column indices are strictly increasing within each row. Explicit zeros
/// are allowed and preserved.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCsr {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseCsr {
    pub fn new(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<f64>,
    ) -> Result<Self> {
        check_len(rows + 1, row_ptr.len())?;
        check_len(col_idx.len(), vals.len())?;
        if row_ptr[0] != 0 || row_ptr[rows] != vals.len() {
            return Err(Error::InvalidInput(
                "row_ptr must start at 0 and end at nnz".into(),
            ));
        }
        for i in 0..rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidInput(format!("row_ptr decreases at row {i}")));
            }
            let cols_in_row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols_in_row.iter().any(|&j| j >= cols) {
                return Err(Error::InvalidInput(format!("column index out of bounds in row {i}")));
            }
            if cols_in_row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sparse entry is not finite".into()));
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    /// Assembles from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|(i, j, _)| *i >= rows || *j >= cols) {
            return Err(Error::InvalidInput(format!(
                "triplet ({i}, {j}) outside a {rows}x{cols} matrix"
            )));
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            vals.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::new(rows, cols, row_ptr, col_idx, vals)
    }

    /// Keeps only the nonzero entries of `a`.
    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(a.rows() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..a.rows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(vals.len());
        }
        Self {
            rows: a.rows(),
            cols: a.cols(),
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    /// Column indices and values stored in row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        Ok(self.matvec_unchecked(x))
    }

    pub(crate) fn matvec_unchecked(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                let mut s = 0.0;
                for (j, v) in cols.iter().zip(vals) {
                    s += v * x[*j];
                }
                s
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (j, v) in cols.iter().zip(vals) {
                d.set(i, *j, *v);
            }
        }
        d
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            vals: self.vals.iter().map(|v| v * alpha).collect(),
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        super::norm_inf(&self.vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_structure() {
        assert!(SparseCsr::new(2, 2, vec![0, 1, 1], vec![0], vec![1.0]).is_ok());
        assert!(SparseCsr::new(2, 2, vec![1, 1, 1], vec![0], vec![1.0]).is_err());
        assert!(SparseCsr::new(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseCsr::new(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseCsr::new(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates_and_keep_explicit_zeros() {
        let m = SparseCsr::from_triplets(2, 2, vec![(1, 1, 0.0), (0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.row(1), (&[1usize][..], &[0.0][..]));
    }
}
