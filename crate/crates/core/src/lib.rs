//! Iterative refinement laboratory.
//!
//! Classical iterative refinement (IR) and its line-search stabilised
//! variants run over pluggable inner "basic methods" (Krylov solvers or a
//! reduced-precision LU) whose matrix-vector products go through a simulated
//! backend: exact binary64, rounded to a narrower IEEE format, or perturbed by
//! seeded Gaussian noise in the manner of an analog crossbar.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense/CSR carriers, norms, reference solvers, condition estimates.
//! - [`rng`]: counter-based Philox generator behind every random draw.
//! - [`backend`]: [`backend::LinearOperator`], format rounding, low-precision LU.
//! - [`krylov`]: GMRES, FGMRES, MINRES, CGS, BiCGSTAB and the [`krylov::BasicMethod`] trait.
//! - [`refine`]: the outer loops, stopping rules, traces and diagnostics.
//! - [`io`]: generators, MatrixMarket, trace CSV, run configs, fetcher.
//! - [`experiment`]: the solve/experiment drivers used by the CLI.

pub mod backend;
pub mod error;
pub mod experiment;
pub mod io;
pub mod krylov;
pub mod linalg;
pub mod refine;
pub mod rng;

pub use error::{Error, Result};
