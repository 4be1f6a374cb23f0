use std::fmt;

use super::ErrorMetrics;
use crate::krylov::InnerSolveStats;

/// Why a refinement run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    Converged,
    Stagnated,
    MaxIterations,
    Diverged,
}

impl Termination {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Termination::Converged => 0,
            Termination::Stagnated | Termination::MaxIterations => 2,
            Termination::Diverged => 3,
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::Stagnated => "stagnated",
            Termination::MaxIterations => "max-iterations",
            Termination::Diverged => "diverged",
        })
    }
}

/// State after outer iteration `iter`. Row 0 holds the initial residual;
/// row `m ≥ 1` also carries the data of the step that produced `x_m`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub res_norm: f64,
    pub rel_res: f64,
    /// `‖x_m − x_ref‖₂` when a reference solution is known.
    pub err_norm: Option<f64>,
    /// `α` for single-direction steps, `‖c‖₂` for multi-direction steps.
    pub step: Option<f64>,
    pub inner: Option<InnerSolveStats>,
    pub identity_check: Option<f64>,
    /// `‖r − A d‖ / (‖A‖·‖d‖)`, a computable stand-in for `‖F_m‖`.
    pub backward_err_proxy: Option<f64>,
    pub true_res_norm: Option<f64>,
    pub metrics: Option<ErrorMetrics>,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterTrace {
    pub records: Vec<IterRecord>,
    pub status: Termination,
    pub warnings: Vec<String>,
}

impl IterTrace {
    pub fn new() -> Self {
        Self { records: Vec::new(), status: Termination::MaxIterations, warnings: Vec::new() }
    }

    pub fn diverged(&self) -> bool {
        self.status == Termination::Diverged
    }

    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_relres(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.rel_res)
    }

    pub fn res_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.res_norm).collect()
    }

    /// Whether every step satisfies `‖r_{m+1}‖ ≤ ‖r_m‖·(1 + rtol)`.
    pub fn is_monotone(&self, rtol: f64) -> bool {
        self.records.windows(2).all(|w| w[1].res_norm <= w[0].res_norm * (1.0 + rtol))
    }
}

impl Default for IterTrace {
    fn default() -> Self {
        Self::new()
    }
}
