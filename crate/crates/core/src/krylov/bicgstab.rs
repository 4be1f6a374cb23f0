use super::{BasicSolverSpec, InnerSolveStats, BREAKDOWN};
use crate::backend::Applier;
use crate::linalg::{norm2, vdot};

/// BiCGSTAB, zero initial guess. Returns the iterate with the smallest
/// recurrence residual.
pub fn bicgstab(ap: &mut Applier<'_>, b: &[f64], spec: &BasicSolverSpec) -> (Vec<f64>, InnerSolveStats) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut stats = InnerSolveStats::default();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (x, stats);
    }
    let mut r = b.to_vec();
    let rhat = b.to_vec();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let (mut rho_old, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
    let mut best = (1.0, x.clone());

    while stats.iterations < spec.max_inner_iters {
        let rho = vdot(&rhat, &r);
        if !(rho.abs() > BREAKDOWN) {
            stats.breakdown = true;
            break;
        }
        if stats.iterations == 0 {
            p.copy_from_slice(&r);
        } else {
            let beta = (rho / rho_old) * (alpha / omega);
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
        }
        v = ap.apply(&p);
        let den = vdot(&rhat, &v);
        if !(den.abs() > BREAKDOWN) {
            stats.breakdown = true;
            break;
        }
        alpha = rho / den;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        stats.iterations += 1;
        let snorm = norm2(&s) / bnorm;
        if snorm <= spec.inner_tol {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            if snorm < best.0 && x.iter().all(|v| v.is_finite()) {
                best = (snorm, x.clone());
            }
            break;
        }
        let t = ap.apply(&s);
        let tt = vdot(&t, &t);
        if !(tt > BREAKDOWN) {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            if snorm < best.0 && x.iter().all(|v| v.is_finite()) {
                best = (snorm, x.clone());
            }
            stats.breakdown = true;
            break;
        }
        omega = vdot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        let relres = norm2(&r) / bnorm;
        if !relres.is_finite() || !x.iter().all(|v| v.is_finite()) {
            stats.breakdown = true;
            break;
        }
        if relres < best.0 {
            best = (relres, x.clone());
        }
        if relres <= spec.inner_tol {
            break;
        }
        if !(omega.abs() > BREAKDOWN) {
            stats.breakdown = true;
            break;
        }
        rho_old = rho;
    }
    stats.relres = best.0;
    stats.matvecs = ap.matvecs();
    (best.1, stats)
}
