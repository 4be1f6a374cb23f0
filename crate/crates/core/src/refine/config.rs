use std::fmt;
use std::str::FromStr;

use crate::backend::FpFormat;
use crate::error::{Error, Result};
use crate::krylov::BasicSolverSpec;

/// Which outer loop to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `x ← x + d`, residual recomputed from scratch.
    Classic,
    /// `x ← x + α d` with the residual-minimising `α`.
    Stable,
    /// Least-squares step over the last `k` directions.
    MultiDir(usize),
    /// Least-squares step over `k` independent solves of the same residual.
    StochasticMultiDir(usize),
}

impl Variant {
    pub fn is_stable(&self) -> bool {
        !matches!(self, Variant::Classic)
    }

    pub fn window(&self) -> usize {
        match *self {
            Variant::MultiDir(k) | Variant::StochasticMultiDir(k) => k,
            _ => 1,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Classic => f.write_str("classic"),
            Variant::Stable => f.write_str("stable"),
            Variant::MultiDir(k) => write!(f, "multidir:{k}"),
            Variant::StochasticMultiDir(k) => write!(f, "stochastic:{k}"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// `classic`, `stable`, `multidir:K`, `stochastic:K` (K defaults to 10).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, k) = match s.split_once(':') {
            Some((n, k)) => {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad window size in variant `{s}`")))?;
                (n.to_string(), Some(k))
            }
            None => (s.clone(), None),
        };
        let v = match name.as_str() {
            "classic" | "ir" => Variant::Classic,
            "stable" => Variant::Stable,
            "multidir" | "multi" => Variant::MultiDir(k.unwrap_or(10)),
            "stochastic" => Variant::StochasticMultiDir(k.unwrap_or(10)),
            _ => return Err(Error::InvalidInput(format!("unknown IR variant `{s}`"))),
        };
        if v.window() == 0 {
            return Err(Error::InvalidInput("window size k must be >= 1".into()));
        }
        Ok(v)
    }
}

/// Outer-loop parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RefineConfig {
    pub variant: Variant,
    pub basic: BasicSolverSpec,
    /// Stop once `‖r_m‖ / ‖r_0‖` is at or below this.
    pub outer_tol: f64,
    pub max_outer_iters: usize,
    /// Stable variants stop when the residual has not improved by more than
    /// a relative `1e-12` over this many iterations.
    pub stagnation_window: usize,
    /// Seed for the noisy backend built around this run.
    pub seed: u64,
    /// Format for residuals, `A d`, and the line-search coefficients.
    pub residual_precision: FpFormat,
    /// Record `‖b − A x_m‖` every N iterations alongside the recursive
    /// residual; 0 disables.
    pub true_residual_every: usize,
    /// Classical IR stops as diverged once `‖r_m‖ > divergence_factor·‖r_0‖`.
    pub divergence_factor: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Stable,
            basic: BasicSolverSpec::default(),
            outer_tol: 1e-12,
            max_outer_iters: 50,
            stagnation_window: 10,
            seed: 0,
            residual_precision: FpFormat::BINARY64,
            true_residual_every: 0,
            divergence_factor: 1e8,
        }
    }
}

impl RefineConfig {
    pub fn new(variant: Variant, basic: BasicSolverSpec) -> Self {
        Self { variant, basic, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.basic.validate()?;
        if self.variant.window() == 0 {
            return Err(Error::InvalidInput("window size k must be >= 1".into()));
        }
        if self.variant.window() > crate::linalg::MAX_SMALL_DIM {
            return Err(Error::InvalidInput(format!(
                "window size k must be <= {}",
                crate::linalg::MAX_SMALL_DIM
            )));
        }
        if !(self.outer_tol > 0.0 && self.outer_tol < 1.0) {
            return Err(Error::InvalidInput(format!("outer_tol must lie in (0, 1), got {}", self.outer_tol)));
        }
        if self.stagnation_window == 0 {
            return Err(Error::InvalidInput("stagnation_window must be >= 1".into()));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::InvalidInput("divergence_factor must exceed 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_parsing() {
        assert_eq!("classic".parse::<Variant>().unwrap(), Variant::Classic);
        assert_eq!("multidir:3".parse::<Variant>().unwrap(), Variant::MultiDir(3));
        assert_eq!("stochastic".parse::<Variant>().unwrap(), Variant::StochasticMultiDir(10));
        assert!("multidir:0".parse::<Variant>().is_err());
        assert!("newton".parse::<Variant>().is_err());
        for v in [Variant::Classic, Variant::Stable, Variant::MultiDir(4), Variant::StochasticMultiDir(2)] {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
    }

    #[test]
    fn config_validation() {
        assert!(RefineConfig::default().validate().is_ok());
        let mut c = RefineConfig { outer_tol: 0.0, ..RefineConfig::default() };
        assert!(c.validate().is_err());
        c.outer_tol = 1e-8;
        c.variant = Variant::MultiDir(100);
        assert!(c.validate().is_err());
    }
}
