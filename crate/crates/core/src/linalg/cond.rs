use super::{norm2, scale, DenseMatrix, LuDecomposition, Matrix};
use crate::error::{Error, Result};
use crate::rng::{PhiloxStream, StreamDomain};

const MAX_POWER_ITERS: usize = 300;
const POWER_RTOL: f64 = 1e-8;

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = PhiloxStream::new(0x5eed_c0de, StreamDomain::CondEstimate as u32, 0);
    let mut v: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    let nv = norm2(&v);
    scale(1.0 / nv, &mut v);
    v
}

/// Power iteration on `AᵀA`; returns an estimate of `σ_max(A)`.
fn power_sigma_max(n: usize, mut apply_ata: impl FnMut(&[f64]) -> Vec<f64>) -> f64 {
    let mut v = start_vector(n);
    let mut lambda = 0.0;
    for _ in 0..MAX_POWER_ITERS {
        let mut w = apply_ata(&v);
        let nw = norm2(&w);
        if nw == 0.0 || !nw.is_finite() {
            return nw.sqrt();
        }
        let converged = (nw - lambda).abs() <= POWER_RTOL * nw;
        lambda = nw;
        scale(1.0 / nw, &mut w);
        v = w;
        if converged {
            break;
        }
    }
    lambda.sqrt()
}

/// Estimate of the spectral norm `‖A‖₂` by power iteration.
pub fn norm2_estimate(a: &Matrix) -> f64 {
    power_sigma_max(a.cols(), |v| {
        let av = a.matvec_unchecked(v);
        a.matvec_transpose(&av).expect("dimensions agree")
    })
}

/// Two-norm condition number estimate `σ_max / σ_min`.
///
/// `σ_max` comes from power iteration on `AᵀA`, `σ_min` from inverse power
/// iteration through one LU factorisation of `A`. Both estimates approach
/// the true values from the inside, so the result never overshoots much and
/// is within a factor of two of the true condition number in practice.
pub fn cond_estimate(a: &DenseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    let n = a.rows();
    let lu = LuDecomposition::factor(a)?;
    let smax = power_sigma_max(n, |v| {
        let av = a.matvec_unchecked(v);
        a.matvec_transpose(&av).expect("square")
    });
    // largest eigenvalue of (AᵀA)⁻¹ = 1/σ_min²
    let inv = power_sigma_max(n, |v| {
        let y = lu.solve_transpose(v).expect("square");
        lu.solve(&y).expect("square")
    });
    let smin = 1.0 / inv;
    if !(smin > 0.0) || !smin.is_finite() || smin < f64::MIN_POSITIVE {
        return Err(Error::SingularMatrix { step: n, pivot: smin });
    }
    Ok(smax / smin)
}
