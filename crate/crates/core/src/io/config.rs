//! Flat key-value run configuration (TOML syntax).
//!
//! ```toml
//! variant = "multidir"
//! k = 10
//! method = "gmres"
//! backend = "noisy:0.02"
//! matrix = "decay-spd"
//! n = 200
//! ```
//!
//! Every key is optional. Unknown keys are rejected.

use std::path::Path;
use std::str::FromStr;

use super::{BackendSpec, MatrixSource, Rhs, SourceParams};
use crate::backend::FpFormat;
use crate::error::{Error, Result};
use crate::krylov::Method;
use crate::refine::{RefineConfig, Variant};

/// Keys understood by [`parse_run_config`].
pub const CONFIG_KEYS: [&str; 20] = [
    "variant",
    "k",
    "method",
    "inner_tol",
    "max_inner_iters",
    "restart",
    "lu_format",
    "outer_tol",
    "max_outer_iters",
    "stagnation_window",
    "seed",
    "residual_precision",
    "true_residual_every",
    "divergence_factor",
    "backend",
    "rhs",
    "matrix",
    "n",
    "cond",
    "normalize",
];

/// A parsed run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub refine: RefineConfig,
    pub backend: BackendSpec,
    pub rhs: Rhs,
    pub matrix: Option<MatrixSource>,
    pub source: SourceParams,
    /// Scale the matrix so its largest entry has this magnitude.
    pub normalize: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            refine: RefineConfig::default(),
            backend: BackendSpec::default(),
            rhs: Rhs::default(),
            matrix: None,
            source: SourceParams::default(),
            normalize: None,
        }
    }
}

pub fn read_run_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    parse_run_config(&std::fs::read_to_string(path.as_ref())?)
}

fn cfg_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), msg: msg.into() }
}

struct Keys(toml::Table);

impl Keys {
    fn str(&self, key: &str) -> Result<Option<&str>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(cfg_err(key, format!("expected a string, got {}", v.type_str()))),
        }
    }

    fn parsed<T: FromStr<Err = Error>>(&self, key: &str) -> Result<Option<T>> {
        self.str(key)?.map(|s| s.parse().map_err(|e: Error| cfg_err(key, e.to_string()))).transpose()
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(cfg_err(key, format!("expected a number, got {}", v.type_str()))),
        }
    }

    fn uint(&self, key: &str) -> Result<Option<u64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(toml::Value::Integer(i)) => Err(cfg_err(key, format!("must be non-negative, got {i}"))),
            Some(v) => Err(cfg_err(key, format!("expected an integer, got {}", v.type_str()))),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.uint(key)?
            .map(|v| usize::try_from(v).map_err(|_| cfg_err(key, "value too large")))
            .transpose()
    }
}

/// Parses config text. Omitted keys keep their defaults (for instance
/// `restart = 30`); each error names the offending key.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    run_config_from_table(parse_table(text)?)
}

pub(crate) fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse().map_err(|e: toml::de::Error| cfg_err("<document>", e.message()))
}

pub(crate) fn run_config_from_table(table: toml::Table) -> Result<RunConfig> {
    if let Some(bad) = table.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(cfg_err(bad, "unknown key"));
    }
    let keys = Keys(table);
    let mut out = RunConfig::default();
    let r = &mut out.refine;

    if let Some(v) = keys.parsed::<Variant>("variant")? {
        r.variant = v;
    }
    if let Some(k) = keys.usize("k")? {
        r.variant = match r.variant {
            Variant::MultiDir(_) => Variant::MultiDir(k),
            Variant::StochasticMultiDir(_) => Variant::StochasticMultiDir(k),
            _ => return Err(cfg_err("k", "only meaningful for multidir or stochastic variants")),
        };
    }
    if let Some(m) = keys.parsed::<Method>("method")? {
        r.basic.method = m;
    }
    if let Some(v) = keys.float("inner_tol")? {
        r.basic.inner_tol = v;
    }
    if let Some(v) = keys.usize("max_inner_iters")? {
        r.basic.max_inner_iters = v;
    }
    if let Some(v) = keys.usize("restart")? {
        r.basic.restart = v;
    }
    if let Some(v) = keys.parsed::<FpFormat>("lu_format")? {
        r.basic.lu_format = v;
    }
    if let Some(v) = keys.float("outer_tol")? {
        r.outer_tol = v;
    }
    if let Some(v) = keys.usize("max_outer_iters")? {
        r.max_outer_iters = v;
    }
    if let Some(v) = keys.usize("stagnation_window")? {
        r.stagnation_window = v;
    }
    if let Some(v) = keys.uint("seed")? {
        r.seed = v;
        out.source.seed = v;
    }
    if let Some(v) = keys.parsed::<FpFormat>("residual_precision")? {
        r.residual_precision = v;
    }
    if let Some(v) = keys.usize("true_residual_every")? {
        r.true_residual_every = v;
    }
    if let Some(v) = keys.float("divergence_factor")? {
        r.divergence_factor = v;
    }
    if let Some(v) = keys.parsed::<BackendSpec>("backend")? {
        out.backend = v;
    }
    if let Some(v) = keys.parsed::<Rhs>("rhs")? {
        out.rhs = v;
    }
    if let Some(v) = keys.usize("n")? {
        out.source.n = v;
    }
    if let Some(v) = keys.float("cond")? {
        out.source.cond = v;
    }
    if let Some(v) = keys.float("normalize")? {
        if !(v > 0.0) {
            return Err(cfg_err("normalize", "must be positive"));
        }
        out.normalize = Some(v);
    }
    if let Some(s) = keys.str("matrix")? {
        out.matrix = Some(MatrixSource::parse(s, out.source).map_err(|e| cfg_err("matrix", e.to_string()))?);
    }
    validate_keys(&out.refine)?;
    Ok(out)
}

/// Maps a validation failure back to the key that caused it.
fn validate_keys(r: &RefineConfig) -> Result<()> {
    let b = &r.basic;
    if !(b.inner_tol > 0.0 && b.inner_tol < 1.0) {
        return Err(cfg_err("inner_tol", "must lie in (0, 1)"));
    }
    if b.max_inner_iters == 0 {
        return Err(cfg_err("max_inner_iters", "must be >= 1"));
    }
    if b.restart == 0 {
        return Err(cfg_err("restart", "must be >= 1"));
    }
    if !(r.outer_tol > 0.0 && r.outer_tol < 1.0) {
        return Err(cfg_err("outer_tol", "must lie in (0, 1)"));
    }
    if r.stagnation_window == 0 {
        return Err(cfg_err("stagnation_window", "must be >= 1"));
    }
    if !(r.divergence_factor > 1.0) {
        return Err(cfg_err("divergence_factor", "must exceed 1"));
    }
    r.validate().map_err(|e| cfg_err("k", e.to_string()))
}
