//! Outer refinement loops and their diagnostics.

mod algorithms;
mod config;
mod diagnostics;
mod trace;

pub use algorithms::{
    ir_classic, normal_equation_coefficients, refine, stable_ir, stable_ir_multidir, stable_ir_stochastic, RefineOutcome, RefineProblem,
    STAGNATION_RTOL,
};
pub use config::{RefineConfig, Variant};
pub use diagnostics::{
    contraction_factor, error_metrics, line_search_alpha, residual_expansion_check, DiagnosticsBound, ErrorMetrics,
};
pub use trace::{IterRecord, IterTrace, Termination};
