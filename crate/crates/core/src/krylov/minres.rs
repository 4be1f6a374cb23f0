use super::arnoldi::lanczos_step;
use super::{BasicSolverSpec, InnerSolveStats, BREAKDOWN};
use crate::backend::Applier;
use crate::linalg::{axpy, norm2, scale};

/// MINRES (Paige–Saunders) for symmetric operators, zero initial guess.
pub fn minres(ap: &mut Applier<'_>, b: &[f64], spec: &BasicSolverSpec) -> (Vec<f64>, InnerSolveStats) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut stats = InnerSolveStats::default();
    let beta1 = norm2(b);
    if beta1 == 0.0 {
        return (x, stats);
    }
    let mut v = b.to_vec();
    scale(1.0 / beta1, &mut v);
    let mut v_prev: Option<Vec<f64>> = None;
    let mut beta = 0.0;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let (mut dbar, mut epsln) = (0.0f64, 0.0f64);
    let mut phibar = beta1;
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut best = (1.0, x.clone());

    while stats.iterations < spec.max_inner_iters {
        let av = ap.apply(&v);
        stats.iterations += 1;
        let (alpha, beta_next, next) = lanczos_step(v_prev.as_deref(), &v, beta, av);

        let oldeps = epsln;
        let delta = cs * dbar + sn * alpha;
        let gbar = sn * dbar - cs * alpha;
        epsln = sn * beta_next;
        dbar = -cs * beta_next;
        let gamma = gbar.hypot(beta_next);
        if !(gamma > BREAKDOWN) || !gamma.is_finite() {
            stats.breakdown = true;
            break;
        }
        cs = gbar / gamma;
        sn = beta_next / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let mut w: Vec<f64> = v.clone();
        axpy(-oldeps, &w1, &mut w);
        axpy(-delta, &w2, &mut w);
        scale(1.0 / gamma, &mut w);
        axpy(phi, &w, &mut x);
        w1 = std::mem::replace(&mut w2, w);

        let relres = phibar.abs() / beta1;
        if !relres.is_finite() || !x.iter().all(|v| v.is_finite()) {
            stats.breakdown = true;
            break;
        }
        if relres <= best.0 {
            best = (relres, x.clone());
        }
        if relres <= spec.inner_tol {
            break;
        }
        match next {
            Some(vn) => {
                v_prev = Some(std::mem::replace(&mut v, vn));
                beta = beta_next;
            }
            None => break,
        }
    }
    stats.relres = best.0;
    stats.matvecs = ap.matvecs();
    (best.1, stats)
}
