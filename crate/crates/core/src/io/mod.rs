//! Matrix generators, MatrixMarket files, trace CSVs, run configs and the
//! SuiteSparse fetcher.

mod config;
mod fetch;
mod generators;
mod mtx;
mod source;
mod trace_csv;

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

pub(crate) use config::{parse_table, run_config_from_table};
pub use config::{parse_run_config, read_run_config, RunConfig, CONFIG_KEYS};
#[cfg(feature = "fetch")]
pub use fetch::fetch_suitesparse;
pub use fetch::{
    index_entry, matrix_market_dims, sha256_hex, FetchOptions, IndexEntry, DEFAULT_URL_TEMPLATE, MATRIX_INDEX,
    URL_TEMPLATE_ENV,
};
pub use generators::{
    gen_conditioned, gen_decay_spd, gen_normal_equations, gen_uniform_random, normalize_dynamic_range, RANK_COND_LIMIT,
};
pub use mtx::{format_matrix_market, parse_matrix_market, read_matrix_market, write_matrix_market};
pub use source::{BackendSpec, MatrixSource, Rhs, SourceParams, DEFAULT_SIGMA, DESK_SCALE_N, FULL_SCALE_N};
pub use trace_csv::{format_trace_csv, parse_trace_csv, read_trace_csv, write_trace_csv, TRACE_COLUMNS};

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> crate::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let seq = COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp = dir.join(format!(".{name}.{}.{seq}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}
