use std::collections::VecDeque;

use super::diagnostics::{error_metrics, residual_expansion_check};
use super::trace::{IterRecord, IterTrace, Termination};
use super::{RefineConfig, Variant};
use crate::backend::{rounded_matvec, FpFormat, LinearOperator};
use crate::error::{check_len, Error, Result};
use crate::krylov::{build_basic_method, BasicMethod, InnerSolveStats};
use crate::linalg::{all_finite, norm2, norm2_estimate, pinv_solve_small, spd_solve_small, vdot, DenseMatrix, Matrix};

/// Stable variants stop when `‖r_m‖` has not dropped below
/// `(1 − STAGNATION_RTOL)·‖r_{m−w}‖` for the stagnation window `w`.
pub const STAGNATION_RTOL: f64 = 1e-12;

/// The system `A x = b` plus optional starting point and reference solution.
#[derive(Clone, Copy, Debug)]
pub struct RefineProblem<'a> {
    pub a: &'a Matrix,
    pub b: &'a [f64],
    /// Defaults to zero.
    pub x0: Option<&'a [f64]>,
    /// Enables `err_norm` and the error metrics in the trace.
    pub x_ref: Option<&'a [f64]>,
}

impl<'a> RefineProblem<'a> {
    pub fn new(a: &'a Matrix, b: &'a [f64]) -> Self {
        Self { a, b, x0: None, x_ref: None }
    }

    pub fn with_x0(mut self, x0: &'a [f64]) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_reference(mut self, x_ref: &'a [f64]) -> Self {
        self.x_ref = Some(x_ref);
        self
    }

    fn validate(&self) -> Result<usize> {
        let n = self.a.rows();
        if !self.a.is_square() {
            return Err(Error::InvalidInput(format!("matrix must be square, got {}x{}", n, self.a.cols())));
        }
        check_len(n, self.b.len())?;
        if let Some(x0) = self.x0 {
            check_len(n, x0.len())?;
        }
        if let Some(x) = self.x_ref {
            check_len(n, x.len())?;
        }
        if !all_finite(self.b) {
            return Err(Error::InvalidInput("right-hand side has non-finite entries".into()));
        }
        Ok(n)
    }
}

#[derive(Clone, Debug)]
pub struct RefineOutcome {
    pub x: Vec<f64>,
    pub trace: IterTrace,
}

/// Runs the variant in `cfg.variant` with the basic method built from
/// `cfg.basic` over `op`. The operator's noise seed is used as given.
pub fn refine(problem: &RefineProblem, op: &LinearOperator, cfg: &RefineConfig) -> Result<RefineOutcome> {
    cfg.validate()?;
    let mut basic = build_basic_method(&cfg.basic, op)?;
    match cfg.variant {
        Variant::Classic => ir_classic(problem, basic.as_mut(), cfg),
        Variant::Stable => stable_ir(problem, basic.as_mut(), cfg),
        Variant::MultiDir(_) => stable_ir_multidir(problem, basic.as_mut(), cfg),
        Variant::StochasticMultiDir(_) => stable_ir_stochastic(problem, basic.as_mut(), cfg),
    }
}

/// Classical refinement: `x ← x + d`, `r ← b − A x` from scratch.
pub fn ir_classic(problem: &RefineProblem, basic: &mut dyn BasicMethod, cfg: &RefineConfig) -> Result<RefineOutcome> {
    let mut run = Run::start(problem, basic, cfg)?;
    while !run.finished() {
        let inner = run.basic.solve(&run.r);
        let w = run.matvec(&inner.d);
        let identity = residual_expansion_check(&run.r, &w)?;
        let proxy = run.backward_proxy(&inner.d, &w);
        for (xi, di) in run.x.iter_mut().zip(&inner.d) {
            *xi += di;
        }
        run.r = run.residual_from_scratch();
        run.push(Step { coef: Some(1.0), inner: Some(inner.stats), identity: Some(identity), proxy });
    }
    Ok(run.finish())
}

/// Line-search refinement with the recursive residual `r ← r − α A d`.
pub fn stable_ir(problem: &RefineProblem, basic: &mut dyn BasicMethod, cfg: &RefineConfig) -> Result<RefineOutcome> {
    windowed(problem, basic, cfg, 1)
}

/// Least-squares step over the last `k` directions. `k = 1` is [`stable_ir`].
pub fn stable_ir_multidir(
    problem: &RefineProblem,
    basic: &mut dyn BasicMethod,
    cfg: &RefineConfig,
) -> Result<RefineOutcome> {
    windowed(problem, basic, cfg, cfg.variant.window())
}

fn windowed(problem: &RefineProblem, basic: &mut dyn BasicMethod, cfg: &RefineConfig, k: usize) -> Result<RefineOutcome> {
    let mut run = Run::start(problem, basic, cfg)?;
    let mut window: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(k);
    while !run.finished() {
        let inner = run.basic.solve(&run.r);
        let w = run.matvec(&inner.d);
        let identity = residual_expansion_check(&run.r, &w)?;
        let proxy = run.backward_proxy(&inner.d, &w);
        window.push_front((inner.d, w));
        window.truncate(k);
        let cols: Vec<(&[f64], &[f64])> = window.iter().map(|(d, w)| (d.as_slice(), w.as_slice())).collect();
        let coef = run.combine(&cols);
        run.push(Step { coef: Some(coef), inner: Some(inner.stats), identity: Some(identity), proxy });
    }
    Ok(run.finish())
}

/// Least-squares step over `k` independent solves of the current residual.
///
/// A deterministic basic method makes all columns equal; the step then
/// matches [`stable_ir`] and a warning is recorded.
pub fn stable_ir_stochastic(
    problem: &RefineProblem,
    basic: &mut dyn BasicMethod,
    cfg: &RefineConfig,
) -> Result<RefineOutcome> {
    let k = cfg.variant.window();
    let mut run = Run::start(problem, basic, cfg)?;
    if k > 1 && !run.basic.is_stochastic() {
        let msg = format!("basic method `{}` is deterministic; the {k} directions coincide", run.basic.name());
        log::warn!("{msg}");
        run.trace.warnings.push(msg);
    }
    while !run.finished() {
        let mut cols = Vec::with_capacity(k);
        let mut stats = InnerSolveStats::default();
        for _ in 0..k {
            let inner = run.basic.solve(&run.r);
            stats.iterations += inner.stats.iterations;
            stats.matvecs += inner.stats.matvecs;
            stats.relres = stats.relres.max(inner.stats.relres);
            stats.breakdown |= inner.stats.breakdown;
            let w = run.matvec(&inner.d);
            cols.push((inner.d, w));
        }
        let (d0, w0) = &cols[0];
        let identity = residual_expansion_check(&run.r, w0)?;
        let proxy = run.backward_proxy(d0, w0);
        let views: Vec<(&[f64], &[f64])> = cols.iter().map(|(d, w)| (d.as_slice(), w.as_slice())).collect();
        let coef = run.combine(&views);
        run.push(Step { coef: Some(coef), inner: Some(stats), identity: Some(identity), proxy });
    }
    Ok(run.finish())
}

/// Dot product with every product and partial sum rounded to `f`.
fn rdot(x: &[f64], y: &[f64], f: FpFormat) -> f64 {
    if f.is_binary64() {
        return vdot(x, y);
    }
    x.iter().zip(y).fold(0.0, |acc, (a, b)| f.round(acc + f.round(a * b)))
}

/// Column-equilibrated normal equations for the columns `w_j = A d_j`:
/// `(S⁻¹WᵀWS⁻¹, S⁻¹Wᵀr)` with `S = diag(‖w_j‖)`, plus `S`. Zero columns get
/// a unit diagonal and a zero right-hand side.
fn gram_system(ad: &[&[f64]], r: &[f64], f: FpFormat) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
    let k = ad.len();
    let scale: Vec<f64> = ad.iter().map(|w| f.round(rdot(w, w, f).sqrt())).collect();
    let mut g = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = if scale[i] == 0.0 || scale[j] == 0.0 {
                if i == j { 1.0 } else { 0.0 }
            } else {
                f.round(rdot(ad[i], ad[j], f) / (scale[i] * scale[j]))
            };
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    let rhs = ad
        .iter()
        .zip(&scale)
        .map(|(w, &s)| if s == 0.0 { 0.0 } else { f.round(rdot(w, r, f) / s) })
        .collect();
    (g, rhs, scale)
}

/// `c_j = ĉ_j / ‖w_j‖`, rounded; zero for zero columns.
fn unscale(c: Vec<f64>, scale: &[f64], f: FpFormat) -> Vec<f64> {
    c.into_iter()
        .zip(scale)
        .map(|(v, &s)| if s == 0.0 { 0.0 } else { f.round(v / s) })
        .collect()
}

/// Coefficients `c` minimising `‖r − Σ c_j w_j‖` through the normal
/// equations `(WᵀW) c = Wᵀr`, as used by the multi-direction step. The
/// columns are scaled to unit norm first, so directions of very different
/// magnitude do not swamp each other.
pub fn normal_equation_coefficients(ad: &[&[f64]], r: &[f64], f: FpFormat) -> Result<Vec<f64>> {
    for w in ad {
        check_len(r.len(), w.len())?;
    }
    if ad.len() == 1 {
        let ww = rdot(ad[0], ad[0], f);
        return Ok(vec![if ww == 0.0 { 0.0 } else { f.round(rdot(r, ad[0], f) / ww) }]);
    }
    let (g, rhs, scale) = gram_system(ad, r, f);
    Ok(unscale(spd_solve_small(&g, &rhs)?, &scale, f))
}

struct Step {
    coef: Option<f64>,
    inner: Option<InnerSolveStats>,
    identity: Option<f64>,
    proxy: Option<f64>,
}

struct Run<'p, 'b> {
    problem: &'p RefineProblem<'p>,
    basic: &'b mut dyn BasicMethod,
    cfg: &'p RefineConfig,
    f: FpFormat,
    x: Vec<f64>,
    r: Vec<f64>,
    r0_norm: f64,
    a_norm: Option<f64>,
    rejected: usize,
    done: bool,
    trace: IterTrace,
}

impl<'p, 'b> Run<'p, 'b> {
    fn start(problem: &'p RefineProblem<'p>, basic: &'b mut dyn BasicMethod, cfg: &'p RefineConfig) -> Result<Self> {
        let n = problem.validate()?;
        cfg.validate()?;
        check_len(n, basic.dim())?;
        let f = cfg.residual_precision;
        let x = problem.x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let mut run = Run {
            problem,
            basic,
            cfg,
            f,
            x,
            r: Vec::new(),
            r0_norm: 0.0,
            a_norm: None,
            rejected: 0,
            done: false,
            trace: IterTrace::new(),
        };
        run.r = run.residual_from_scratch();
        run.r0_norm = norm2(&run.r);
        run.push(Step { coef: None, inner: None, identity: None, proxy: None });
        Ok(run)
    }

    fn finished(&self) -> bool {
        self.done
    }

    fn stable(&self) -> bool {
        self.cfg.variant.is_stable()
    }

    /// `A v` in the residual precision.
    fn matvec(&self, v: &[f64]) -> Vec<f64> {
        if self.f.is_binary64() {
            self.problem.a.matvec_unchecked(v)
        } else {
            rounded_matvec(self.problem.a, v, self.f)
        }
    }

    fn residual_from_scratch(&self) -> Vec<f64> {
        let ax = self.matvec(&self.x);
        self.problem.b.iter().zip(&ax).map(|(bi, ai)| self.f.round(bi - ai)).collect()
    }

    fn backward_proxy(&mut self, d: &[f64], w: &[f64]) -> Option<f64> {
        let a_norm = *self.a_norm.get_or_insert_with(|| norm2_estimate(self.problem.a));
        let gap: Vec<f64> = self.r.iter().zip(w).map(|(ri, wi)| ri - wi).collect();
        let num = norm2(&gap);
        let v = if num == 0.0 { 0.0 } else { num / (a_norm * norm2(d)) };
        v.is_finite().then_some(v)
    }

    /// Picks coefficients for the columns `(d_j, A d_j)`, newest first,
    /// applies the update to `x` and `r`, and returns `α` (one column) or
    /// `‖c‖₂`. A step that would increase `‖r‖` is replaced by the
    /// pseudoinverse solution and then by no step at all.
    fn combine(&mut self, cols: &[(&[f64], &[f64])]) -> f64 {
        let usable: Vec<(&[f64], &[f64])> =
            cols.iter().copied().filter(|(d, w)| all_finite(d) && all_finite(w)).collect();
        if usable.is_empty() {
            self.rejected += 1;
            return 0.0;
        }
        let old = norm2(&self.r);
        let ad: Vec<&[f64]> = usable.iter().map(|(_, w)| *w).collect();
        let mut candidates = Vec::with_capacity(2);
        if let Ok(c) = normal_equation_coefficients(&ad, &self.r, self.f) {
            candidates.push(c);
        }
        if ad.len() > 1 {
            let (g, rhs, scale) = gram_system(&ad, &self.r, self.f);
            if let Ok(c) = pinv_solve_small(&g, &rhs) {
                candidates.push(unscale(c, &scale, self.f));
            }
        }
        for c in candidates {
            if !all_finite(&c) {
                continue;
            }
            let r_new = self.updated_residual(&usable, &c);
            if norm2(&r_new) <= old {
                for (cj, (d, _)) in c.iter().zip(&usable) {
                    for (xi, di) in self.x.iter_mut().zip(d.iter()) {
                        *xi += cj * di;
                    }
                }
                self.r = r_new;
                return if c.len() == 1 { c[0] } else { norm2(&c) };
            }
        }
        self.rejected += 1;
        0.0
    }

    fn updated_residual(&self, cols: &[(&[f64], &[f64])], c: &[f64]) -> Vec<f64> {
        let f = self.f;
        (0..self.r.len())
            .map(|i| {
                let mut z = 0.0;
                for (cj, (_, w)) in c.iter().zip(cols) {
                    z = f.round(z + f.round(cj * w[i]));
                }
                f.round(self.r[i] - z)
            })
            .collect()
    }

    fn push(&mut self, step: Step) {
        let iter = self.trace.records.len();
        let res_norm = norm2(&self.r);
        let rel_res = if self.r0_norm == 0.0 { res_norm } else { res_norm / self.r0_norm };
        let err_norm = self
            .problem
            .x_ref
            .map(|xr| norm2(&self.x.iter().zip(xr).map(|(a, b)| a - b).collect::<Vec<_>>()));
        let every = self.cfg.true_residual_every;
        let need_true = self.problem.x_ref.is_some() || (self.stable() && every > 0 && iter % every == 0);
        let true_r: Option<Vec<f64>> = need_true.then(|| {
            let ax = self.problem.a.matvec_unchecked(&self.x);
            self.problem.b.iter().zip(&ax).map(|(b, a)| b - a).collect()
        });
        let true_res_norm = if self.stable() && every > 0 && iter % every == 0 {
            true_r.as_deref().map(norm2)
        } else {
            None
        };
        let metrics = match (self.problem.x_ref, &true_r) {
            (Some(xr), Some(tr)) => error_metrics(&self.x, xr, tr, self.problem.a, self.problem.b).ok(),
            _ => None,
        };

        let mut status = None;
        let mut diverged = false;
        if !res_norm.is_finite() || (!self.stable() && res_norm > self.cfg.divergence_factor * self.r0_norm) {
            diverged = true;
            status = Some(Termination::Diverged);
        } else if rel_res <= self.cfg.outer_tol {
            status = Some(Termination::Converged);
        } else if self.stable() && self.stagnated(iter, res_norm) {
            status = Some(Termination::Stagnated);
        } else if iter >= self.cfg.max_outer_iters {
            status = Some(Termination::MaxIterations);
        }

        self.trace.records.push(IterRecord {
            iter,
            res_norm,
            rel_res,
            err_norm,
            step: step.coef,
            inner: step.inner,
            identity_check: step.identity,
            backward_err_proxy: step.proxy,
            true_res_norm,
            metrics,
            diverged,
        });
        if let Some(s) = status {
            self.trace.status = s;
            self.done = true;
        }
    }

    fn stagnated(&self, iter: usize, res_norm: f64) -> bool {
        let w = self.cfg.stagnation_window;
        w > 0 && iter >= w && res_norm > self.trace.records[iter - w].res_norm * (1.0 - STAGNATION_RTOL)
    }

    fn finish(mut self) -> RefineOutcome {
        if self.rejected > 0 {
            let msg = format!("{} step(s) rejected because they would have increased the residual", self.rejected);
            log::debug!("{msg}");
            self.trace.warnings.push(msg);
        }
        RefineOutcome { x: self.x, trace: self.trace }
    }
}
