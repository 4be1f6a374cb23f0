//! Scalar diagnostics of a refinement step.

use crate::error::{check_len, Error, Result};
use crate::linalg::{norm_inf, vdot, Matrix};

/// `α = rᵀw / ‖w‖²`, the minimiser of `‖r − α w‖`; zero when `w = 0`.
pub fn line_search_alpha(r: &[f64], w: &[f64]) -> Result<f64> {
    check_len(r.len(), w.len())?;
    let ww = vdot(w, w);
    Ok(if ww == 0.0 { 0.0 } else { vdot(r, w) / ww })
}

/// `‖r − w‖² − (‖r‖² + ‖w‖² − 2 rᵀw)`: zero up to rounding for any `r`, `w`.
///
/// With `w = A d` the first term is the classical-IR residual `‖r_{m+1}‖²`, so
/// the identity shows the residual grows exactly when `rᵀA d` is small
/// compared with `‖A d‖²`.
pub fn residual_expansion_check(r: &[f64], w: &[f64]) -> Result<f64> {
    check_len(r.len(), w.len())?;
    let diff: Vec<f64> = r.iter().zip(w).map(|(a, b)| a - b).collect();
    let lhs = vdot(&diff, &diff);
    let rhs = vdot(r, r) + vdot(w, w) - 2.0 * vdot(r, w);
    Ok(lhs - rhs)
}

/// The per-step error contraction bound for stable IR when the inner solve
/// satisfies `A (I + F) d = r` with `‖F‖ = norm_f < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsBound {
    pub cond_a: f64,
    pub norm_f: f64,
    /// `(2 + cond_a)⁻¹`: `factor < 1` exactly when `norm_f` is below it.
    pub threshold: f64,
    /// `(1 + cond_a)·norm_f / (1 − norm_f)`.
    pub factor: f64,
    /// Bound on `|α − 1|`: `cond_a · norm_f`.
    pub alpha_deviation: f64,
}

impl DiagnosticsBound {
    pub fn contracts(&self) -> bool {
        self.factor < 1.0
    }

    pub fn below_threshold(&self) -> bool {
        self.norm_f < self.threshold
    }
}

pub fn contraction_factor(cond_a: f64, norm_f: f64) -> Result<DiagnosticsBound> {
    if !(cond_a >= 1.0) {
        return Err(Error::Domain(format!("condition number must be >= 1, got {cond_a}")));
    }
    if !(0.0..1.0).contains(&norm_f) {
        return Err(Error::Domain(format!("‖F‖ must lie in [0, 1), got {norm_f}")));
    }
    Ok(DiagnosticsBound {
        cond_a,
        norm_f,
        threshold: 1.0 / (2.0 + cond_a),
        factor: (1.0 + cond_a) * norm_f / (1.0 - norm_f),
        alpha_deviation: cond_a * norm_f,
    })
}

/// Forward, normwise backward and componentwise backward errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorMetrics {
    pub ferr: f64,
    pub nbe: f64,
    pub cbe: f64,
}

/// `ferr = ‖x − x_ref‖∞/‖x_ref‖∞`, `nbe = ‖r‖∞/(‖A‖∞‖x‖∞ + ‖b‖∞)`,
/// `cbe = maxᵢ |rᵢ| / (|A||x| + |b|)ᵢ` with `0/0 = 0`, where `r` is the
/// residual the caller associates with `x` (`b − A x` or a recursive update).
pub fn error_metrics(x: &[f64], x_ref: &[f64], r: &[f64], a: &Matrix, b: &[f64]) -> Result<ErrorMetrics> {
    let n = a.cols();
    check_len(n, x.len())?;
    check_len(n, x_ref.len())?;
    check_len(a.rows(), r.len())?;
    check_len(a.rows(), b.len())?;
    let diff: Vec<f64> = x.iter().zip(x_ref).map(|(u, v)| u - v).collect();
    let ferr = ratio(norm_inf(&diff), norm_inf(x_ref));
    let nbe = ratio(norm_inf(r), a.norm_inf() * norm_inf(x) + norm_inf(b));
    let ax = a.abs_matvec(x)?;
    let cbe = r
        .iter()
        .zip(ax.iter().zip(b))
        .map(|(ri, (axi, bi))| ratio(ri.abs(), axi + bi.abs()))
        .fold(0.0, f64::max);
    Ok(ErrorMetrics { ferr, nbe, cbe })
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}
