use super::{BasicSolverSpec, InnerSolveStats, BREAKDOWN};
use crate::backend::Applier;
use crate::linalg::{axpy, norm2, vdot};

/// Conjugate Gradient Squared, zero initial guess. Returns the iterate with
/// the smallest recurrence residual.
pub fn cgs(ap: &mut Applier<'_>, b: &[f64], spec: &BasicSolverSpec) -> (Vec<f64>, InnerSolveStats) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut stats = InnerSolveStats::default();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (x, stats);
    }
    let mut r = b.to_vec();
    let rtilde = b.to_vec();
    let mut u = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut rho_old = 1.0;
    let mut best = (1.0, x.clone());

    while stats.iterations < spec.max_inner_iters {
        let rho = vdot(&rtilde, &r);
        if !(rho.abs() > BREAKDOWN) {
            stats.breakdown = true;
            break;
        }
        if stats.iterations == 0 {
            u.copy_from_slice(&r);
            p.copy_from_slice(&r);
        } else {
            let beta = rho / rho_old;
            for i in 0..n {
                u[i] = r[i] + beta * q[i];
                p[i] = u[i] + beta * (q[i] + beta * p[i]);
            }
        }
        let vhat = ap.apply(&p);
        let sigma = vdot(&rtilde, &vhat);
        if !(sigma.abs() > BREAKDOWN) {
            stats.breakdown = true;
            break;
        }
        let alpha = rho / sigma;
        for i in 0..n {
            q[i] = u[i] - alpha * vhat[i];
        }
        let uq: Vec<f64> = u.iter().zip(&q).map(|(a, b)| a + b).collect();
        axpy(alpha, &uq, &mut x);
        let quq = ap.apply(&uq);
        axpy(-alpha, &quq, &mut r);
        stats.iterations += 1;
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
        rho_old = rho;
    }
    stats.relres = best.0;
    stats.matvecs = ap.matvecs();
    (best.1, stats)
}
