//! Single solves and experiment grids as run by the command-line tool.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::backend::LinearOperator;
use crate::error::{Error, Result};
use crate::io::{
    atomic_write, normalize_dynamic_range, parse_table, run_config_from_table, write_trace_csv, BackendSpec,
    MatrixSource, RunConfig,
};
use crate::krylov::Method;
use crate::linalg::Matrix;
use crate::refine::{refine, RefineConfig, RefineOutcome, RefineProblem, Termination, Variant};
use crate::rng::derive_seed;

/// Exit code for errors before or outside the refinement loop.
pub const EXIT_ERROR: i32 = 1;

/// A loaded linear system.
#[derive(Clone, Debug)]
pub struct System {
    pub a: Arc<Matrix>,
    pub b: Vec<f64>,
    pub x_ref: Option<Vec<f64>>,
    /// Factor applied to the stored matrix by dynamic-range normalisation.
    pub scale: f64,
}

impl System {
    /// Loads the matrix named by `rc.matrix` (or `fallback`), normalises it if
    /// asked, and builds the right-hand side.
    pub fn from_config(rc: &RunConfig, fallback: Option<&MatrixSource>, cache_dir: &Path) -> Result<Self> {
        let source = rc
            .matrix
            .as_ref()
            .or(fallback)
            .ok_or_else(|| Error::Config { key: "matrix".into(), msg: "no matrix given".into() })?;
        let mut a = source.load(cache_dir)?;
        let mut scale = 1.0;
        if let Some(target) = rc.normalize {
            (a, scale) = normalize_dynamic_range(&a, target)?;
        }
        Self::new(a, rc, scale)
    }

    pub fn new(a: Matrix, rc: &RunConfig, scale: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput(format!("matrix must be square, got {}x{}", a.rows(), a.cols())));
        }
        let (b, x_ref) = rc.rhs.build(&a, rc.source.seed)?;
        Ok(Self { a: Arc::new(a), b, x_ref, scale })
    }

    pub fn problem(&self) -> RefineProblem<'_> {
        let p = RefineProblem::new(&self.a, &self.b);
        match &self.x_ref {
            Some(x) => p.with_reference(x),
            None => p,
        }
    }
}

/// Runs one refinement with the noise stream keyed by `cfg.seed`.
pub fn run_solve(system: &System, backend: BackendSpec, cfg: &RefineConfig) -> Result<RefineOutcome> {
    let op = LinearOperator::new(system.a.clone(), backend.mode(cfg.seed)?);
    refine(&system.problem(), &op, cfg)
}

/// 0 converged, 2 stagnated or out of iterations, 3 diverged.
pub fn exit_code(status: Termination) -> i32 {
    status.exit_code()
}

/// One-paragraph human summary of a finished run.
pub fn summarize(outcome: &RefineOutcome) -> String {
    let t = &outcome.trace;
    let mut s = format!(
        "status: {}\niterations: {}\nfinal relres: {:e}\ndiverged: {}\n",
        t.status,
        t.iterations(),
        t.final_relres(),
        t.diverged()
    );
    if let Some(e) = t.records.last().and_then(|r| r.err_norm) {
        let _ = writeln!(s, "final error: {e:e}");
    }
    for w in &t.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

/// A grid of (method × variant × repeat) runs on one matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    /// Shared settings; `refine.variant` and `refine.basic.method` are
    /// replaced per run and `refine.seed` is the base seed.
    pub base: RunConfig,
    pub methods: Vec<Method>,
    pub variants: Vec<Variant>,
    pub repeats: usize,
    pub output_dir: PathBuf,
}

const PLAN_KEYS: [&str; 4] = ["methods", "variants", "repeats", "output_dir"];

pub fn read_experiment_plan(path: impl AsRef<Path>) -> Result<ExperimentPlan> {
    parse_experiment_plan(&std::fs::read_to_string(path.as_ref())?)
}

/// Parses a plan: the run-config keys plus `methods`, `variants` (string
/// arrays), `repeats` and `output_dir`.
pub fn parse_experiment_plan(text: &str) -> Result<ExperimentPlan> {
    let mut table = parse_table(text)?;
    let plan: Vec<(String, toml::Value)> =
        PLAN_KEYS.iter().filter_map(|k| table.remove(*k).map(|v| (k.to_string(), v))).collect();
    let base = run_config_from_table(table)?;
    let mut out = ExperimentPlan {
        methods: vec![base.refine.basic.method],
        variants: vec![base.refine.variant],
        repeats: 1,
        output_dir: PathBuf::from("results"),
        base,
    };
    let err = |key: &str, msg: String| Error::Config { key: key.into(), msg };
    for (key, value) in plan {
        match (key.as_str(), value) {
            ("methods", toml::Value::Array(a)) => out.methods = string_list(&key, &a)?,
            ("variants", toml::Value::Array(a)) => out.variants = string_list(&key, &a)?,
            ("repeats", toml::Value::Integer(r)) if r >= 1 => out.repeats = r as usize,
            ("repeats", v) => return Err(err(&key, format!("must be an integer >= 1, got {v}"))),
            ("output_dir", toml::Value::String(s)) => out.output_dir = PathBuf::from(s),
            (_, v) => return Err(err(&key, format!("unexpected {}", v.type_str()))),
        }
    }
    if out.methods.is_empty() {
        return Err(err("methods", "list is empty".into()));
    }
    if out.variants.is_empty() {
        return Err(err("variants", "list is empty".into()));
    }
    Ok(out)
}

fn string_list<T: std::str::FromStr<Err = Error>>(key: &str, items: &[toml::Value]) -> Result<Vec<T>> {
    items
        .iter()
        .map(|v| match v {
            toml::Value::String(s) => s.parse().map_err(|e: Error| Error::Config { key: key.into(), msg: e.to_string() }),
            other => Err(Error::Config { key: key.into(), msg: format!("expected strings, got {}", other.type_str()) }),
        })
        .collect()
}

/// Outcome of one grid cell.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub method: Method,
    pub variant: Variant,
    pub repeat: usize,
    pub seed: u64,
    pub csv: PathBuf,
    pub result: std::result::Result<RunStats, String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunStats {
    pub status: Termination,
    pub iterations: usize,
    pub final_relres: f64,
    pub initial_res: f64,
    pub final_res: f64,
}

impl RunStats {
    pub fn from_outcome(o: &RefineOutcome) -> Self {
        let t = &o.trace;
        Self {
            status: t.status,
            iterations: t.iterations(),
            final_relres: t.final_relres(),
            initial_res: t.records.first().map_or(f64::NAN, |r| r.res_norm),
            final_res: t.records.last().map_or(f64::NAN, |r| r.res_norm),
        }
    }
}

/// File-name-safe label of a variant, e.g. `multidir-k10`.
pub fn variant_label(v: Variant) -> String {
    match v {
        Variant::MultiDir(k) => format!("multidir-k{k}"),
        Variant::StochasticMultiDir(k) => format!("stochastic-k{k}"),
        other => other.to_string(),
    }
}

/// Runs every cell of the grid in parallel, writes one trace CSV per cell
/// and `summary.md`. Repeat `r` uses seed `derive_seed(base, r)` for all
/// methods and variants, so cells of one repeat see the same noise streams.
/// A failing cell is recorded and the rest of the grid still runs.
pub fn run_experiment(plan: &ExperimentPlan, cache_dir: &Path) -> Result<Vec<RunRecord>> {
    let system = System::from_config(&plan.base, None, cache_dir)?;
    std::fs::create_dir_all(&plan.output_dir)?;
    let base_seed = plan.base.refine.seed;
    let mut cells = Vec::new();
    for &method in &plan.methods {
        for &variant in &plan.variants {
            for repeat in 0..plan.repeats {
                cells.push((method, variant, repeat));
            }
        }
    }
    let records: Vec<RunRecord> = cells
        .into_par_iter()
        .map(|(method, variant, repeat)| {
            let seed = derive_seed(base_seed, repeat as u64);
            let mut cfg = plan.base.refine.clone();
            cfg.variant = variant;
            cfg.basic.method = method;
            cfg.seed = seed;
            let csv = plan.output_dir.join(format!("{}_{}_r{:03}.csv", method, variant_label(variant), repeat));
            let result = run_solve(&system, plan.base.backend, &cfg)
                .and_then(|o| {
                    write_trace_csv(&o.trace, &csv)?;
                    Ok(RunStats::from_outcome(&o))
                })
                .map_err(|e| e.to_string());
            if let Err(e) = &result {
                log::warn!("{method} {variant} repeat {repeat}: {e}");
            }
            RunRecord { method, variant, repeat, seed, csv, result }
        })
        .collect();
    let summary = format_summary(plan, &records, unix_time());
    atomic_write(&plan.output_dir.join("summary.md"), summary.as_bytes())?;
    Ok(records)
}

fn unix_time() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Median of the finite values; NaN when there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Markdown summary. Only the first line carries the timestamp.
pub fn format_summary(plan: &ExperimentPlan, records: &[RunRecord], timestamp: u64) -> String {
    let mut s = format!("<!-- generated at unix time {timestamp} -->\n# Experiment summary\n\n");
    let _ = writeln!(
        s,
        "backend `{}`, rhs `{}`, base seed {}, {} repeat(s)\n",
        plan.base.backend, plan.base.rhs, plan.base.refine.seed, plan.repeats
    );
    s.push_str("| method | variant | runs | converged | stagnated | max-iter | diverged | failed | median final relres | median iterations |\n");
    s.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    for &method in &plan.methods {
        for &variant in &plan.variants {
            let group: Vec<&RunRecord> =
                records.iter().filter(|r| r.method == method && r.variant == variant).collect();
            let ok: Vec<&RunStats> = group.iter().filter_map(|r| r.result.as_ref().ok()).collect();
            let count = |t: Termination| ok.iter().filter(|s| s.status == t).count();
            let relres: Vec<f64> = ok.iter().map(|s| s.final_relres).collect();
            let iters: Vec<f64> = ok.iter().map(|s| s.iterations as f64).collect();
            let _ = writeln!(
                s,
                "| {method} | {variant} | {} | {} | {} | {} | {} | {} | {:.3e} | {} |",
                group.len(),
                count(Termination::Converged),
                count(Termination::Stagnated),
                count(Termination::MaxIterations),
                count(Termination::Diverged),
                group.len() - ok.len(),
                median(&relres),
                median(&iters),
            );
        }
    }
    s.push_str("\n## Runs\n\n| method | variant | repeat | seed | status | iterations | final relres | trace |\n");
    s.push_str("|---|---|---|---|---|---|---|---|\n");
    for r in records {
        let file = r.csv.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        match &r.result {
            Ok(st) => {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {} | {} | {:.3e} | {file} |",
                    r.method, r.variant, r.repeat, r.seed, st.status, st.iterations, st.final_relres
                );
            }
            Err(e) => {
                let _ = writeln!(s, "| {} | {} | {} | {} | failed: {} | | | |", r.method, r.variant, r.repeat, r.seed, e.replace('|', "/"));
            }
        }
    }
    s
}
