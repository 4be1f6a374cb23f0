//! Synthetic test matrices.

use crate::error::{check_len, Error, Result};
use crate::linalg::{cond_estimate, householder_qr, random_orthogonal, DenseMatrix, Matrix};
use crate::rng::{PhiloxStream, StreamDomain};

/// Full-column-rank threshold for [`gen_normal_equations`].
pub const RANK_COND_LIMIT: f64 = 1e12;

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("matrix size must be >= 2, got {n}")));
    }
    Ok(())
}

/// `A_ii = 1 + √i`, `A_ij = 1/|i − j|` with 1-based indices.
pub fn gen_decay_spd(n: usize) -> Result<DenseMatrix> {
    check_n(n)?;
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 + ((i + 1) as f64).sqrt()
        } else {
            1.0 / (i as f64 - j as f64).abs()
        }
    }))
}

/// Entries i.i.d. uniform on `[0, 1)`, row-major from one Philox stream.
pub fn gen_uniform_random(n: usize, seed: u64) -> Result<DenseMatrix> {
    check_n(n)?;
    let mut rng = PhiloxStream::new(seed, StreamDomain::UniformMatrix as u32, 0);
    Ok(DenseMatrix::from_fn(n, n, |_, _| rng.next_f64()))
}

/// `A = HᵀH`, `b = Hᵀy`.
pub fn gen_normal_equations(h: &DenseMatrix, y: &[f64]) -> Result<(DenseMatrix, Vec<f64>)> {
    check_len(h.rows(), y.len())?;
    if h.rows() < h.cols() {
        return Err(Error::RankDeficient { cond: f64::INFINITY });
    }
    let (_, r) = householder_qr(h);
    let cond = cond_estimate(&r).unwrap_or(f64::INFINITY);
    if !(cond <= RANK_COND_LIMIT) {
        return Err(Error::RankDeficient { cond });
    }
    let ht = h.transpose();
    let a = ht.matmul(h)?;
    let b = ht.matvec(y)?;
    Ok((a, b))
}

/// `U·diag(σ)·Vᵀ` with `σ` log-spaced from 1 down to `1/target_cond` and Haar
/// random `U`, `V`. With `symmetric` the same factor is used on both sides
/// and the result is mirrored so it is symmetric bit-for-bit.
pub fn gen_conditioned(n: usize, target_cond: f64, seed: u64, symmetric: bool) -> Result<DenseMatrix> {
    check_n(n)?;
    if !(target_cond >= 1.0) || !target_cond.is_finite() {
        return Err(Error::InvalidInput(format!("target condition number must be >= 1, got {target_cond}")));
    }
    let sigma: Vec<f64> = (0..n)
        .map(|i| target_cond.powf(-(i as f64) / (n - 1) as f64))
        .collect();
    let u = random_orthogonal(n, &mut PhiloxStream::new(seed, StreamDomain::ConditionedLeft as u32, 0));
    let v = if symmetric {
        u.clone()
    } else {
        random_orthogonal(n, &mut PhiloxStream::new(seed, StreamDomain::ConditionedRight as u32, 0))
    };
    let mut us = u;
    for i in 0..n {
        for j in 0..n {
            us.set(i, j, us.get(i, j) * sigma[j]);
        }
    }
    let mut a = us.matmul(&v.transpose())?;
    if symmetric {
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (a.get(i, j) + a.get(j, i));
                a.set(i, j, m);
                a.set(j, i, m);
            }
        }
    }
    Ok(a)
}

/// Scales `a` so its largest entry in magnitude is `target_max`. Returns the
/// scaled matrix and `γ = target_max / max|a_ij|`; the solution of
/// `(γA) x̂ = b` gives `x = γ x̂`.
pub fn normalize_dynamic_range(a: &Matrix, target_max: f64) -> Result<(Matrix, f64)> {
    if !(target_max > 0.0) || !target_max.is_finite() {
        return Err(Error::InvalidInput(format!("target_max must be positive, got {target_max}")));
    }
    let m = a.max_abs();
    if m == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let gamma = target_max / m;
    if gamma == 1.0 {
        return Ok((a.clone(), 1.0));
    }
    Ok((a.scaled(gamma), gamma))
}
