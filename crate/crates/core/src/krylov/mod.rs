//! Inner "basic method" solvers.
//!
//! Every Krylov method sees the matrix only through an [`Applier`] over a
//! [`LinearOperator`], so the backend (exact, rounded, noisy) decides what
//! each matvec returns. All inner solves start from a zero initial guess and
//! never abort: on breakdown they return the best iterate found and set
//! [`InnerSolveStats::breakdown`].

mod arnoldi;
mod bicgstab;
mod cgs;
mod gmres;
mod minres;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use arnoldi::{arnoldi, arnoldi_step, lanczos, lanczos_step, ArnoldiDecomposition, ArnoldiStep};
pub use bicgstab::bicgstab;
pub use cgs::cgs;
pub use gmres::{fgmres, gmres, IdentityPreconditioner, Preconditioner};
pub use minres::minres;

use crate::backend::{lu_factor_lowprec, Applier, FpFormat, LinearOperator, LuFactors};
use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, LuDecomposition, Matrix};

/// Divisors with magnitude below this count as breakdown.
pub const BREAKDOWN: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Gmres,
    Fgmres,
    Minres,
    Cgs,
    Bicgstab,
    /// Partial-pivoted LU in [`BasicSolverSpec::lu_format`].
    LuLowPrec,
    /// Binary64 direct solve on the exact matrix; reference inner solver.
    Exact,
    /// Returns `-A⁻¹ r`; the classical-IR divergence witness.
    Adversarial,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Gmres,
        Method::Fgmres,
        Method::Minres,
        Method::Cgs,
        Method::Bicgstab,
        Method::LuLowPrec,
        Method::Exact,
        Method::Adversarial,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gmres => "gmres",
            Method::Fgmres => "fgmres",
            Method::Minres => "minres",
            Method::Cgs => "cgs",
            Method::Bicgstab => "bicgstab",
            Method::LuLowPrec => "lu",
            Method::Exact => "exact",
            Method::Adversarial => "adversarial",
        }
    }

    pub fn is_krylov(&self) -> bool {
        matches!(
            self,
            Method::Gmres | Method::Fgmres | Method::Minres | Method::Cgs | Method::Bicgstab
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s || (s == "lu_lowprec" && *m == Method::LuLowPrec))
            .ok_or_else(|| Error::InvalidInput(format!("unknown basic method `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasicSolverSpec {
    pub method: Method,
    /// Relative residual target in `(0, 1)`.
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    /// Cycle length for GMRES/FGMRES.
    pub restart: usize,
    /// Working format for [`Method::LuLowPrec`].
    pub lu_format: FpFormat,
}

impl Default for BasicSolverSpec {
    fn default() -> Self {
        Self {
            method: Method::Gmres,
            inner_tol: 1e-6,
            max_inner_iters: 100,
            restart: 30,
            lu_format: FpFormat::BINARY32,
        }
    }
}

impl BasicSolverSpec {
    pub fn new(method: Method) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol > 0.0 && self.inner_tol < 1.0) {
            return Err(Error::InvalidInput(format!("inner_tol must lie in (0, 1), got {}", self.inner_tol)));
        }
        if self.max_inner_iters == 0 {
            return Err(Error::InvalidInput("max_inner_iters must be >= 1".into()));
        }
        if self.restart == 0 {
            return Err(Error::InvalidInput("restart must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InnerSolveStats {
    pub iterations: usize,
    /// Relative residual as tracked by the method (recurrence or Givens
    /// estimate for Krylov methods, true residual for direct ones).
    pub relres: f64,
    pub matvecs: usize,
    pub breakdown: bool,
}

#[derive(Clone, Debug)]
pub struct InnerSolve {
    pub d: Vec<f64>,
    pub stats: InnerSolveStats,
}

/// An inner solver for `A z = r` as seen by the refinement loops.
///
/// Successive calls may differ (noisy backends advance their call counter).
pub trait BasicMethod {
    fn solve(&mut self, r: &[f64]) -> InnerSolve;

    /// Whether two solves of the same residual can return different vectors.
    fn is_stochastic(&self) -> bool {
        false
    }

    fn dim(&self) -> usize;

    fn name(&self) -> String;
}

/// Runs one Krylov solve of `op z = r` starting at noise call `first_call`.
pub fn run_krylov(
    spec: &BasicSolverSpec,
    op: &LinearOperator,
    r: &[f64],
    first_call: u64,
) -> (Vec<f64>, InnerSolveStats) {
    let mut ap = Applier::new(op, first_call);
    match spec.method {
        Method::Gmres => gmres(&mut ap, r, spec),
        Method::Fgmres => fgmres(&mut ap, r, spec, &mut IdentityPreconditioner),
        Method::Minres => minres(&mut ap, r, spec),
        Method::Cgs => cgs(&mut ap, r, spec),
        Method::Bicgstab => bicgstab(&mut ap, r, spec),
        other => unreachable!("{other} is not a Krylov method"),
    }
}

/// A Krylov method bound to an operator, owning the noise call counter.
#[derive(Debug)]
pub struct KrylovBasic {
    spec: BasicSolverSpec,
    op: LinearOperator,
    next_call: u64,
}

impl KrylovBasic {
    pub fn new(spec: BasicSolverSpec, op: LinearOperator) -> Result<Self> {
        spec.validate()?;
        if !spec.method.is_krylov() {
            return Err(Error::InvalidInput(format!("{} is not a Krylov method", spec.method)));
        }
        check_len(op.rows(), op.cols())?;
        Ok(Self { spec, op, next_call: 0 })
    }
}

impl BasicMethod for KrylovBasic {
    fn solve(&mut self, r: &[f64]) -> InnerSolve {
        let (d, stats) = run_krylov(&self.spec, &self.op, r, self.next_call);
        self.next_call += stats.matvecs as u64;
        InnerSolve { d, stats }
    }

    fn is_stochastic(&self) -> bool {
        self.op.is_stochastic()
    }

    fn dim(&self) -> usize {
        self.op.rows()
    }

    fn name(&self) -> String {
        self.spec.method.name().into()
    }
}

fn true_relres(a: &Matrix, r: &[f64], d: &[f64]) -> f64 {
    let rn = norm2(r);
    if rn == 0.0 {
        return 0.0;
    }
    let ad = a.matvec_unchecked(d);
    let diff: Vec<f64> = r.iter().zip(&ad).map(|(x, y)| x - y).collect();
    norm2(&diff) / rn
}

fn direct_stats(a: &Matrix, r: &[f64], d: &[f64]) -> InnerSolveStats {
    InnerSolveStats { iterations: 1, relres: true_relres(a, r, d), matvecs: 1, breakdown: false }
}

/// Reduced-precision LU basic method; the matrix is factored once.
#[derive(Debug)]
pub struct LuBasic {
    matrix: Arc<Matrix>,
    factors: LuFactors,
}

impl LuBasic {
    pub fn new(matrix: Arc<Matrix>, format: FpFormat) -> Result<Self> {
        let factors = lu_factor_lowprec(&matrix.to_dense(), format)?;
        Ok(Self { matrix, factors })
    }
}

impl BasicMethod for LuBasic {
    fn solve(&mut self, r: &[f64]) -> InnerSolve {
        let d = self.factors.solve(r).expect("dimensions checked at construction");
        let stats = direct_stats(&self.matrix, r, &d);
        InnerSolve { d, stats }
    }

    fn dim(&self) -> usize {
        self.factors.dim()
    }

    fn name(&self) -> String {
        format!("lu-{}", self.factors.format())
    }
}

/// Binary64 LU on the exact matrix, optionally negated.
#[derive(Debug)]
pub struct DirectBasic {
    matrix: Arc<Matrix>,
    lu: LuDecomposition,
    sign: f64,
}

impl DirectBasic {
    pub fn exact(matrix: Arc<Matrix>) -> Result<Self> {
        let lu = LuDecomposition::factor(&matrix.to_dense())?;
        Ok(Self { matrix, lu, sign: 1.0 })
    }

    /// Always returns `-A⁻¹ r`.
    pub fn adversarial(matrix: Arc<Matrix>) -> Result<Self> {
        Ok(Self { sign: -1.0, ..Self::exact(matrix)? })
    }
}

impl BasicMethod for DirectBasic {
    fn solve(&mut self, r: &[f64]) -> InnerSolve {
        let mut d = self.lu.solve(r).expect("dimensions checked at construction");
        if self.sign < 0.0 {
            d.iter_mut().for_each(|v| *v = -*v);
        }
        let stats = direct_stats(&self.matrix, r, &d);
        InnerSolve { d, stats }
    }

    fn dim(&self) -> usize {
        self.lu.dim()
    }

    fn name(&self) -> String {
        if self.sign < 0.0 { "adversarial" } else { "exact" }.into()
    }
}

/// Builds the basic method described by `spec` over `op`. Direct methods
/// (LU, exact, adversarial) use the operator's matrix and ignore its mode.
pub fn build_basic_method(spec: &BasicSolverSpec, op: &LinearOperator) -> Result<Box<dyn BasicMethod + Send>> {
    spec.validate()?;
    check_len(op.rows(), op.cols())?;
    Ok(match spec.method {
        Method::LuLowPrec => Box::new(LuBasic::new(op.matrix().clone(), spec.lu_format)?),
        Method::Exact => Box::new(DirectBasic::exact(op.matrix().clone())?),
        Method::Adversarial => Box::new(DirectBasic::adversarial(op.matrix().clone())?),
        _ => Box::new(KrylovBasic::new(*spec, op.clone())?),
    })
}

/// One inner solve of `op z = r` with the method in `spec`, noise calls
/// starting at 0.
pub fn solve_basic(spec: &BasicSolverSpec, op: &LinearOperator, r: &[f64]) -> Result<(Vec<f64>, InnerSolveStats)> {
    check_len(op.rows(), r.len())?;
    let mut m = build_basic_method(spec, op)?;
    let out = m.solve(r);
    Ok((out.d, out.stats))
}
