use super::{norm2, DenseMatrix};
use crate::rng::PhiloxStream;

/// Householder QR of an `m×n` matrix with `m >= n`. Returns the thin `Q`
/// (`m×n`) and square `R` (`n×n`).
pub fn householder_qr(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (m, n) = (a.rows(), a.cols());
    assert!(m >= n, "householder_qr needs rows >= cols");
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v: Vec<f64> = (k..m).map(|i| r.get(i, k)).collect();
        let alpha = norm2(&v);
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vn = norm2(&v);
        if vn > 0.0 {
            for x in v.iter_mut() {
                *x /= vn;
            }
            for j in k..n {
                let s: f64 = (k..m).map(|i| v[i - k] * r.get(i, j)).sum();
                for i in k..m {
                    r.set(i, j, r.get(i, j) - 2.0 * v[i - k] * s);
                }
            }
        }
        reflectors.push(v);
    }
    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I
    let mut q = DenseMatrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
    for k in (0..n).rev() {
        let v = &reflectors[k];
        for j in 0..n {
            let s: f64 = (k..m).map(|i| v[i - k] * q.get(i, j)).sum();
            for i in k..m {
                q.set(i, j, q.get(i, j) - 2.0 * v[i - k] * s);
            }
        }
    }
    let r_sq = DenseMatrix::from_fn(n, n, |i, j| if j >= i { r.get(i, j) } else { 0.0 });
    (q, r_sq)
}

/// Haar-distributed random orthogonal matrix: QR of a Gaussian matrix with
/// the signs of `diag(R)` folded into `Q`.
pub fn random_orthogonal(n: usize, rng: &mut PhiloxStream) -> DenseMatrix {
    let g = DenseMatrix::from_fn(n, n, |_, _| rng.next_normal());
    let (mut q, r) = householder_qr(&g);
    for j in 0..n {
        if r.get(j, j) < 0.0 {
            for i in 0..n {
                q.set(i, j, -q.get(i, j));
            }
        }
    }
    q
}
