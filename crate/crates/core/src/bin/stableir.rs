//! Command-line driver: generate or fetch matrices, run one refinement, or a
//! whole experiment grid.
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stableir::experiment::{read_experiment_plan, run_experiment, run_solve, summarize, System, EXIT_ERROR};
use stableir::io::{
    read_run_config, write_matrix_market, write_trace_csv, BackendSpec, MatrixSource, Rhs, RunConfig, SourceParams,
    DESK_SCALE_N, FULL_SCALE_N,
};
use stableir::krylov::Method;
use stableir::refine::Variant;
use stableir::{Error, Result};

/// Environment variable naming a default run-config file.
const CONFIG_ENV: &str = "STABLEIR_CONFIG";
/// Environment variable naming the directory for fetched matrices.
const CACHE_ENV: &str = "STABLEIR_CACHE_DIR";

#[derive(Parser)]
#[command(name = "stableir", version, about = "Stable iterative refinement lab", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated matrix to a MatrixMarket file
    Gen(GenArgs),
    /// Run one refinement and write its trace
    Solve(SolveArgs),
    /// Run an experiment plan
    Experiment(ExperimentArgs),
    /// Download a SuiteSparse matrix from the built-in index
    Fetch(FetchArgs),
}

#[derive(Args)]
struct Scale {
    /// Matrix size for synthetic matrices
    #[arg(long)]
    n: Option<usize>,
    /// Use the original experiment size (n = 2000) unless --n is given
    #[arg(long)]
    full_scale: bool,
}

impl Scale {
    fn n(&self) -> Option<usize> {
        self.n.or(self.full_scale.then_some(FULL_SCALE_N))
    }
}

#[derive(Args)]
struct GenArgs {
    /// decay-spd, uniform, normal-eq, conditioned or conditioned-sym
    kind: String,
    #[command(flatten)]
    scale: Scale,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target condition number for the conditioned kinds
    #[arg(long, default_value_t = 1e6)]
    cond: f64,
    /// Output file
    #[arg(long, default_value = "matrix.mtx")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix source: a generator name, fetch:NAME, or a MatrixMarket path
    #[arg(long)]
    matrix: Option<String>,
    /// Run-config file (defaults to $STABLEIR_CONFIG)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trace CSV path
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    scale: Scale,
    /// Window size for multidir/stochastic
    #[arg(long)]
    k: Option<usize>,
    /// exact, rounded:FMT or noisy:SIGMA
    #[arg(long)]
    backend: Option<BackendSpec>,
    #[arg(long)]
    method: Option<Method>,
    /// classic, stable, multidir[:K] or stochastic[:K]
    #[arg(long)]
    variant: Option<Variant>,
    /// ones (b = A·1) or random
    #[arg(long)]
    rhs: Option<Rhs>,
    #[arg(long)]
    cond: Option<f64>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Plan file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the plan)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides the plan)
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    scale: Scale,
}

#[derive(Args)]
struct FetchArgs {
    name: String,
    /// Destination directory
    #[arg(long, default_value = "matrices")]
    out: PathBuf,
    /// Use a local archive or .mtx file instead of the network
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Expected SHA-256 of the download
    #[arg(long)]
    sha256: Option<String>,
    /// URL template with {group} and {name}
    #[arg(long)]
    url: Option<String>,
    /// Download even if the file is already present
    #[arg(long)]
    force: bool,
}

/// Prints to stdout, ignoring a closed pipe.
fn out(args: std::fmt::Arguments) {
    let _ = std::io::stdout().lock().write_fmt(args);
}

fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV).map_or_else(|| PathBuf::from("matrices"), PathBuf::from)
}

fn cmd_gen(args: &GenArgs) -> Result<i32> {
    let p = SourceParams { n: args.scale.n().unwrap_or(DESK_SCALE_N), seed: args.seed, cond: args.cond };
    let source = MatrixSource::parse(&args.kind, p)?;
    if matches!(source, MatrixSource::MatrixMarketFile(_) | MatrixSource::Fetch(_)) {
        return Err(Error::InvalidInput(format!("`{}` is not a generator", args.kind)));
    }
    let a = source.load(&cache_dir())?;
    write_matrix_market(&a, &args.out)?;
    out(format_args!("wrote {} ({}x{}) to {}\n", source, a.rows(), a.cols(), args.out.display()));
    Ok(0)
}

fn apply_k(variant: Variant, k: usize) -> Result<Variant> {
    match variant {
        Variant::MultiDir(_) => Ok(Variant::MultiDir(k)),
        Variant::StochasticMultiDir(_) => Ok(Variant::StochasticMultiDir(k)),
        v => Err(Error::InvalidInput(format!("--k does not apply to the {v} variant"))),
    }
}

fn solve_config(args: &SolveArgs) -> Result<RunConfig> {
    let path = args.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut rc = match path {
        Some(p) => read_run_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = args.scale.n() {
        rc.source.n = n;
    }
    if let Some(seed) = args.seed {
        rc.source.seed = seed;
        rc.refine.seed = seed;
    }
    if let Some(c) = args.cond {
        rc.source.cond = c;
    }
    if let Some(b) = args.backend {
        rc.backend = b;
    }
    if let Some(m) = args.method {
        rc.refine.basic.method = m;
    }
    if let Some(v) = args.variant {
        rc.refine.variant = v;
    }
    if let Some(k) = args.k {
        rc.refine.variant = apply_k(rc.refine.variant, k)?;
    }
    if let Some(r) = args.rhs {
        rc.rhs = r;
    }
    rc.matrix = match &args.matrix {
        Some(m) => Some(MatrixSource::parse(m, rc.source)?),
        None => rc.matrix.map(|m| m.with_params(rc.source)),
    };
    rc.refine.validate()?;
    Ok(rc)
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let rc = solve_config(args)?;
    let system = System::from_config(&rc, None, &cache_dir())?;
    let outcome = run_solve(&system, rc.backend, &rc.refine)?;
    write_trace_csv(&outcome.trace, &args.out)?;
    out(format_args!("{}trace: {}\n", summarize(&outcome), args.out.display()));
    Ok(outcome.trace.status.exit_code())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<i32> {
    let mut plan = read_experiment_plan(&args.config)?;
    if let Some(out) = &args.out {
        plan.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        plan.base.refine.seed = seed;
        plan.base.source.seed = seed;
    }
    if let Some(n) = args.scale.n() {
        plan.base.source.n = n;
    }
    plan.base.matrix = plan.base.matrix.map(|m| m.with_params(plan.base.source));
    let records = run_experiment(&plan, &cache_dir())?;
    let failed = records.iter().filter(|r| r.result.is_err()).count();
    out(format_args!(
        "{} run(s), {} failed; summary in {}\n",
        records.len(),
        failed,
        Path::new(&plan.output_dir).join("summary.md").display()
    ));
    Ok(if failed > 0 { EXIT_ERROR } else { 0 })
}

#[cfg(feature = "fetch")]
fn cmd_fetch(args: &FetchArgs) -> Result<i32> {
    use stableir::io::{fetch_suitesparse, FetchOptions};
    let opts = FetchOptions {
        url_template: args.url.clone(),
        sha256: args.sha256.clone(),
        offline_fixture: args.fixture.clone(),
        force: args.force,
    };
    let path = fetch_suitesparse(&args.name, &args.out, &opts)?;
    out(format_args!("{}\n", path.display()));
    Ok(0)
}

#[cfg(not(feature = "fetch"))]
fn cmd_fetch(args: &FetchArgs) -> Result<i32> {
    stableir::io::index_entry(&args.name)?;
    Err(Error::Network("built without the `fetch` feature".into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Fetch(a) => cmd_fetch(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
