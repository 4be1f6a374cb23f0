//! Simulated matvec substrates and the reduced-precision direct solver.

mod format;
mod lu;
mod operator;

pub use format::{round_to, round_vec, FpFormat};
pub use lu::{lu_factor_lowprec, lu_solve, LuFactors};
pub use operator::{rounded_matvec, Applier, LinearOperator, Mode, NoiseModel};
