use super::arnoldi::arnoldi_step;
use super::{BasicSolverSpec, InnerSolveStats, BREAKDOWN};
use crate::backend::Applier;
use crate::linalg::{axpy, norm2, scale};

/// Variable right preconditioner for FGMRES. `iteration` is the global inner
/// iteration index, so implementations may change from step to step.
pub trait Preconditioner {
    fn apply(&mut self, v: &[f64], iteration: usize) -> Vec<f64>;
}

/// `M = I`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&mut self, v: &[f64], _iteration: usize) -> Vec<f64> {
        v.to_vec()
    }
}

/// Restarted GMRES with zero initial guess.
pub fn gmres(ap: &mut Applier<'_>, b: &[f64], spec: &BasicSolverSpec) -> (Vec<f64>, InnerSolveStats) {
    gmres_impl(ap, b, spec, None)
}

/// Restarted flexible GMRES with zero initial guess.
pub fn fgmres(
    ap: &mut Applier<'_>,
    b: &[f64],
    spec: &BasicSolverSpec,
    precond: &mut dyn Preconditioner,
) -> (Vec<f64>, InnerSolveStats) {
    gmres_impl(ap, b, spec, Some(precond))
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        (1.0, 0.0, a)
    } else {
        let r = a.hypot(b);
        (a / r, b / r, r)
    }
}

fn gmres_impl(
    ap: &mut Applier<'_>,
    b: &[f64],
    spec: &BasicSolverSpec,
    mut precond: Option<&mut dyn Preconditioner>,
) -> (Vec<f64>, InnerSolveStats) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    let mut stats = InnerSolveStats::default();
    if bnorm == 0.0 {
        return (x, stats);
    }
    let restart = spec.restart.max(1);
    let target = spec.inner_tol * bnorm;
    let mut r = b.to_vec();
    let mut beta = bnorm;
    let mut relres = 1.0;

    while stats.iterations < spec.max_inner_iters {
        let mut v0 = r.clone();
        scale(1.0 / beta, &mut v0);
        let mut basis = vec![v0];
        let mut zs: Vec<Vec<f64>> = Vec::new();
        // upper-triangular factor after rotations, column-wise
        let mut rcols: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut converged = false;

        for j in 0..restart {
            if stats.iterations >= spec.max_inner_iters {
                break;
            }
            let w = match precond.as_deref_mut() {
                Some(m) => {
                    let z = m.apply(&basis[j], stats.iterations);
                    let w = ap.apply(&z);
                    zs.push(z);
                    w
                }
                None => ap.apply(&basis[j]),
            };
            stats.iterations += 1;
            let step = arnoldi_step(&basis, w);
            let mut col = step.coeffs;
            for i in 0..j {
                let (hi, hi1) = (col[i], col[i + 1]);
                col[i] = cs[i] * hi + sn[i] * hi1;
                col[i + 1] = -sn[i] * hi + cs[i] * hi1;
            }
            let (c, s, rjj) = givens(col[j], step.next_norm);
            col[j] = rjj;
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            rcols.push(col);
            relres = g[j + 1].abs() / bnorm;
            if !relres.is_finite() {
                stats.breakdown = true;
                break;
            }
            match step.next {
                Some(v) => basis.push(v),
                None => {
                    converged = true;
                    break;
                }
            }
            if g[j + 1].abs() <= target {
                converged = true;
                break;
            }
        }

        // back substitution on the leading well-posed block
        let m = rcols.len();
        let mut usable = m;
        for (i, col) in rcols.iter().enumerate() {
            if !(col[i].abs() > BREAKDOWN) || !col[i].is_finite() {
                usable = i;
                stats.breakdown = true;
                break;
            }
        }
        let mut y = vec![0.0; usable];
        for i in (0..usable).rev() {
            let mut s = g[i];
            for (k, yk) in y.iter().enumerate().skip(i + 1) {
                s -= rcols[k][i] * yk;
            }
            y[i] = s / rcols[i][i];
        }
        let dirs = if zs.is_empty() { &basis } else { &zs };
        let mut x_new = x.clone();
        for (yi, d) in y.iter().zip(dirs.iter()) {
            axpy(*yi, d, &mut x_new);
        }
        if x_new.iter().all(|v| v.is_finite()) {
            x = x_new;
        } else {
            stats.breakdown = true;
        }
        if converged || stats.breakdown || stats.iterations >= spec.max_inner_iters {
            break;
        }
        // restart from the recomputed residual
        let ax = ap.apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        beta = norm2(&r);
        relres = beta / bnorm;
        if beta <= target || !(beta > BREAKDOWN) {
            break;
        }
    }
    stats.relres = relres;
    stats.matvecs = ap.matvecs();
    (x, stats)
}
