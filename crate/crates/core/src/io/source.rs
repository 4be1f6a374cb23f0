//! Where a run's matrix, backend and right-hand side come from.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{gen_conditioned, gen_decay_spd, gen_normal_equations, gen_uniform_random, read_matrix_market};
use crate::backend::{FpFormat, Mode, NoiseModel};
use crate::error::{Error, Result};
use crate::linalg::{dense_solve, DenseMatrix, Matrix};
use crate::rng::{PhiloxStream, StreamDomain};

/// Noise level used by `noisy` without an explicit sigma.
pub const DEFAULT_SIGMA: f64 = 0.02;

/// Matrix size used for synthetic matrices unless overridden.
pub const DESK_SCALE_N: usize = 200;

/// Matrix size of the original synthetic experiments.
pub const FULL_SCALE_N: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixSource {
    DecaySpd { n: usize },
    UniformRandom { n: usize, seed: u64 },
    /// `A = HᵀH` for a Gaussian `H` of size `rows × cols`.
    NormalEquations { rows: usize, cols: usize, seed: u64 },
    Conditioned { n: usize, cond: f64, seed: u64, symmetric: bool },
    MatrixMarketFile(PathBuf),
    /// A matrix from the fetch index, downloaded into the cache directory.
    Fetch(String),
}

/// Size, seed and condition number applied to the synthetic kinds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceParams {
    pub n: usize,
    pub seed: u64,
    pub cond: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self { n: DESK_SCALE_N, seed: 0, cond: 1e6 }
    }
}

impl MatrixSource {
    /// Parses `decay-spd`, `uniform`, `normal-eq`, `conditioned`,
    /// `conditioned-sym`, `fetch:NAME`, or a MatrixMarket path.
    pub fn parse(spec: &str, p: SourceParams) -> Result<Self> {
        let s = spec.trim();
        Ok(match s {
            "decay-spd" | "decay" => MatrixSource::DecaySpd { n: p.n },
            "uniform" | "uniform-random" => MatrixSource::UniformRandom { n: p.n, seed: p.seed },
            "normal-eq" | "normal-equations" => MatrixSource::NormalEquations { rows: 2 * p.n, cols: p.n, seed: p.seed },
            "conditioned" | "conditioned-sym" => MatrixSource::Conditioned {
                n: p.n,
                cond: p.cond,
                seed: p.seed,
                symmetric: s.ends_with("-sym"),
            },
            _ => match s.strip_prefix("fetch:") {
                Some(name) if !name.is_empty() => MatrixSource::Fetch(name.to_string()),
                Some(_) => return Err(Error::InvalidInput("`fetch:` needs a matrix name".into())),
                None if s.is_empty() => return Err(Error::InvalidInput("empty matrix source".into())),
                None => MatrixSource::MatrixMarketFile(PathBuf::from(s.strip_prefix("file:").unwrap_or(s))),
            },
        })
    }

    /// Replaces size, seed and condition number of a synthetic source.
    pub fn with_params(&self, p: SourceParams) -> Self {
        match self {
            MatrixSource::DecaySpd { .. } => MatrixSource::DecaySpd { n: p.n },
            MatrixSource::UniformRandom { .. } => MatrixSource::UniformRandom { n: p.n, seed: p.seed },
            MatrixSource::NormalEquations { .. } => MatrixSource::NormalEquations { rows: 2 * p.n, cols: p.n, seed: p.seed },
            MatrixSource::Conditioned { symmetric, .. } => {
                MatrixSource::Conditioned { n: p.n, cond: p.cond, seed: p.seed, symmetric: *symmetric }
            }
            other => other.clone(),
        }
    }

    /// Builds or reads the matrix. `cache_dir` is used by [`MatrixSource::Fetch`].
    pub fn load(&self, cache_dir: &Path) -> Result<Matrix> {
        Ok(match self {
            MatrixSource::DecaySpd { n } => gen_decay_spd(*n)?.into(),
            MatrixSource::UniformRandom { n, seed } => gen_uniform_random(*n, *seed)?.into(),
            MatrixSource::NormalEquations { rows, cols, seed } => {
                let mut rng = PhiloxStream::new(*seed, StreamDomain::NormalEquations as u32, 0);
                let h = DenseMatrix::from_fn(*rows, *cols, |_, _| rng.next_normal());
                let y: Vec<f64> = (0..*rows).map(|_| rng.next_normal()).collect();
                gen_normal_equations(&h, &y)?.0.into()
            }
            MatrixSource::Conditioned { n, cond, seed, symmetric } => {
                gen_conditioned(*n, *cond, *seed, *symmetric)?.into()
            }
            MatrixSource::MatrixMarketFile(path) => {
                if !path.exists() {
                    return Err(Error::InvalidInput(format!("matrix file {} does not exist", path.display())));
                }
                read_matrix_market(path)?
            }
            MatrixSource::Fetch(name) => fetch_cached(name, cache_dir)?,
        })
    }
}

#[cfg(feature = "fetch")]
fn fetch_cached(name: &str, cache_dir: &Path) -> Result<Matrix> {
    let path = super::fetch_suitesparse(name, cache_dir, &super::FetchOptions::default())?;
    read_matrix_market(path)
}

#[cfg(not(feature = "fetch"))]
fn fetch_cached(name: &str, cache_dir: &Path) -> Result<Matrix> {
    let entry = super::index_entry(name)?;
    let path = cache_dir.join(format!("{}.mtx", entry.name));
    if path.exists() {
        return read_matrix_market(path);
    }
    Err(Error::Network("built without the `fetch` feature".into()))
}

impl fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixSource::DecaySpd { n } => write!(f, "decay-spd(n={n})"),
            MatrixSource::UniformRandom { n, seed } => write!(f, "uniform(n={n}, seed={seed})"),
            MatrixSource::NormalEquations { rows, cols, seed } => write!(f, "normal-eq({rows}x{cols}, seed={seed})"),
            MatrixSource::Conditioned { n, cond, seed, symmetric } => {
                let kind = if *symmetric { "conditioned-sym" } else { "conditioned" };
                write!(f, "{kind}(n={n}, cond={cond:e}, seed={seed})")
            }
            MatrixSource::MatrixMarketFile(p) => write!(f, "{}", p.display()),
            MatrixSource::Fetch(name) => write!(f, "fetch:{name}"),
        }
    }
}

/// How matrix-vector products inside the basic method are performed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BackendSpec {
    Exact,
    Rounded(FpFormat),
    Noisy { sigma: f64 },
}

impl BackendSpec {
    /// The operator mode for a run whose noise stream is keyed by `seed`.
    pub fn mode(&self, seed: u64) -> Result<Mode> {
        Ok(match *self {
            BackendSpec::Exact => Mode::Exact,
            BackendSpec::Rounded(f) => Mode::Rounded(f),
            BackendSpec::Noisy { sigma } => Mode::Noisy(NoiseModel::new(sigma, seed)?),
        })
    }
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Exact
    }
}

impl FromStr for BackendSpec {
    type Err = Error;

    /// `exact`, `rounded:FMT`, `noisy` or `noisy:SIGMA`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind.to_ascii_lowercase().as_str(), arg) {
            ("exact", None) => Ok(BackendSpec::Exact),
            ("rounded", Some(f)) => Ok(BackendSpec::Rounded(f.parse()?)),
            ("rounded", None) => Ok(BackendSpec::Rounded(FpFormat::BINARY32)),
            ("noisy", None) => Ok(BackendSpec::Noisy { sigma: DEFAULT_SIGMA }),
            ("noisy", Some(a)) => {
                let sigma: f64 = a.parse().map_err(|_| Error::InvalidInput(format!("bad noise level `{a}`")))?;
                NoiseModel::new(sigma, 0)?;
                Ok(BackendSpec::Noisy { sigma })
            }
            _ => Err(Error::InvalidInput(format!("unknown backend `{s}` (exact, rounded:FMT, noisy:SIGMA)"))),
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Exact => f.write_str("exact"),
            BackendSpec::Rounded(fmt) => write!(f, "rounded:{fmt}"),
            BackendSpec::Noisy { sigma } => write!(f, "noisy:{sigma}"),
        }
    }
}

/// Right-hand side choice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Rhs {
    /// `b = A·1`, so the reference solution is the all-ones vector.
    #[default]
    Ones,
    /// Gaussian `b`; the reference solution comes from a dense solve.
    Random,
}

impl Rhs {
    /// Returns `b` and, when it can be had, the reference solution.
    pub fn build(&self, a: &Matrix, seed: u64) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        let n = a.rows();
        match self {
            Rhs::Ones => {
                let ones = vec![1.0; a.cols()];
                Ok((a.matvec(&ones)?, Some(ones)))
            }
            Rhs::Random => {
                let mut rng = PhiloxStream::new(seed, StreamDomain::RandomRhs as u32, 0);
                let b: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
                let x = if a.is_square() { dense_solve(&a.to_dense(), &b).ok() } else { None };
                Ok((b, x))
            }
        }
    }
}

impl FromStr for Rhs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ones" => Ok(Rhs::Ones),
            "random" => Ok(Rhs::Random),
            other => Err(Error::InvalidInput(format!("unknown rhs `{other}` (ones, random)"))),
        }
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rhs::Ones => "ones",
            Rhs::Random => "random",
        })
    }
}
