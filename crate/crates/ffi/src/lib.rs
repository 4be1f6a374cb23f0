//! C interface to `stableir`.
//!
//! Matrices and solve results are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns a
//! [`SirStatus`]; on failure the message is kept per thread and can be read
//! with [`sir_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use stableir::experiment::{run_solve, System};
use stableir::io::{parse_run_config, read_matrix_market, write_trace_csv, MatrixSource, RunConfig, SourceParams};
use stableir::linalg::{DenseMatrix, Matrix};
use stableir::refine::RefineOutcome;
use stableir::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SirStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Singular = 4,
    Parse = 5,
    Config = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
    Other = 10,
}

/// A square or rectangular real matrix.
pub struct SirMatrix {
    inner: Matrix,
}

/// The solution and trace of one refinement run.
pub struct SirOutcome {
    inner: RefineOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SirStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::IndexOutOfBounds { .. } => SirStatus::DimensionMismatch,
        Error::SingularMatrix { .. } | Error::RankDeficient { .. } | Error::ZeroMatrix => SirStatus::Singular,
        Error::Parse { .. } | Error::UnsupportedField(_) | Error::Csv(_) => SirStatus::Parse,
        Error::Config { .. } => SirStatus::Config,
        Error::Io(_) => SirStatus::Io,
        Error::InvalidInput(_) | Error::Domain(_) | Error::NotInIndex(_) => SirStatus::InvalidArgument,
        _ => SirStatus::Other,
    }
}

struct Fail(SirStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SirStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SirStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SirStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SirStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SirStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Copies `src` into `(buf, cap)` and stores the full length in `*len`.
/// A null `buf` only queries the length.
unsafe fn copy_out(src: &[f64], buf: *mut f64, cap: usize, len: *mut usize) -> Result<(), Fail> {
    if !len.is_null() {
        *len = src.len();
    }
    if buf.is_null() {
        return Ok(());
    }
    if cap < src.len() {
        return Err(Fail(SirStatus::BufferTooSmall, format!("need {} values, buffer holds {cap}", src.len())));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Static version string.
#[no_mangle]
pub extern "C" fn sir_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sir_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Generates a synthetic matrix. `kind` is `decay-spd`, `uniform`,
/// `normal-eq`, `conditioned` or `conditioned-sym`; `cond` is used by the
/// conditioned kinds only.
///
/// # Safety
/// `kind` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sir_matrix_generate(
    kind: *const c_char,
    n: usize,
    seed: u64,
    cond: f64,
    out: *mut *mut SirMatrix,
) -> SirStatus {
    guard(|| {
        let kind = str_arg(kind, "kind")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let source = MatrixSource::parse(kind, SourceParams { n, seed, cond })?;
        match source {
            MatrixSource::MatrixMarketFile(_) | MatrixSource::Fetch(_) => {
                return Err(Fail(SirStatus::InvalidArgument, format!("`{kind}` is not a generator")))
            }
            _ => {}
        }
        let inner = source.load(std::path::Path::new("."))?;
        put(out, SirMatrix { inner });
        Ok(())
    })
}

/// Reads a MatrixMarket file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sir_matrix_read(path: *const c_char, out: *mut *mut SirMatrix) -> SirStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, SirMatrix { inner: read_matrix_market(path)? });
        Ok(())
    })
}

/// Copies a dense row-major `rows × cols` array into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sir_matrix_from_dense(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut SirMatrix,
) -> SirStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = rows
            .checked_mul(cols)
            .filter(|&l| l > 0)
            .ok_or_else(|| Fail(SirStatus::InvalidArgument, format!("bad shape {rows}x{cols}")))?;
        let vals = slice_arg(data, len, "data")?;
        let a = DenseMatrix::from_fn(rows, cols, |i, j| vals[i * cols + j]);
        put(out, SirMatrix { inner: Matrix::Dense(a) });
        Ok(())
    })
}

/// Number of rows, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sir_matrix_rows(m: *const SirMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.rows())
}

/// Number of columns, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sir_matrix_cols(m: *const SirMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.cols())
}

/// Entry `(i, j)`, zero-based.
///
/// # Safety
/// `m` and `value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sir_matrix_get(m: *const SirMatrix, i: usize, j: usize, value: *mut f64) -> SirStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("m"))?;
        if value.is_null() {
            return Err(null("value"));
        }
        if i >= m.inner.rows() || j >= m.inner.cols() {
            return Err(Fail(SirStatus::DimensionMismatch, format!("({i}, {j}) is outside the matrix")));
        }
        *value = m.inner.get(i, j);
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sir_matrix_free(m: *mut SirMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Runs one refinement on `a`.
///
/// `config` is run-config text in the same TOML form the command-line tool
/// reads, or null for defaults; its `matrix` key is ignored. With `b` null
/// the right-hand side comes from the config's `rhs` key and the reference
/// solution is recorded in the trace.
///
/// # Safety
/// `a` must be a live handle, `b` null or `b_len` doubles, `config` null or
/// NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sir_solve(
    a: *const SirMatrix,
    b: *const f64,
    b_len: usize,
    config: *const c_char,
    out: *mut *mut SirOutcome,
) -> SirStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(|| null("a"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rc = if config.is_null() { RunConfig::default() } else { parse_run_config(str_arg(config, "config")?)? };
        let mut system = System::new(a.inner.clone(), &rc, 1.0)?;
        if !b.is_null() {
            let b = slice_arg(b, b_len, "b")?;
            if b.len() != system.a.rows() {
                return Err(Error::DimensionMismatch { expected: system.a.rows(), got: b.len() }.into());
            }
            system = System { a: Arc::clone(&system.a), b: b.to_vec(), x_ref: None, scale: 1.0 };
        }
        let outcome = run_solve(&system, rc.backend, &rc.refine)?;
        put(out, SirOutcome { inner: outcome });
        Ok(())
    })
}

/// Process-style exit code: 0 converged, 2 stagnated or out of iterations,
/// 3 diverged. -1 for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sir_outcome_status(o: *const SirOutcome) -> i32 {
    o.as_ref().map_or(-1, |o| o.inner.trace.status.exit_code())
}

/// Outer iterations performed.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sir_outcome_iterations(o: *const SirOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.inner.trace.iterations())
}

/// `‖r_m‖/‖r_0‖` at the last iteration, NaN for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sir_outcome_final_relres(o: *const SirOutcome) -> f64 {
    o.as_ref().map_or(f64::NAN, |o| o.inner.trace.final_relres())
}

/// Copies the solution into `buf`. `*len` receives its length; a null `buf`
/// only queries it.
///
/// # Safety
/// `o` must be live, `buf` null or `cap` doubles, `len` null or valid.
#[no_mangle]
pub unsafe extern "C" fn sir_outcome_solution(o: *const SirOutcome, buf: *mut f64, cap: usize, len: *mut usize) -> SirStatus {
    guard(|| {
        let o = o.as_ref().ok_or_else(|| null("o"))?;
        copy_out(&o.inner.x, buf, cap, len)
    })
}

/// Copies the residual norms `‖r_0‖, …, ‖r_m‖`, with the same buffer rules as
/// [`sir_outcome_solution`].
///
/// # Safety
/// As for [`sir_outcome_solution`].
#[no_mangle]
pub unsafe extern "C" fn sir_outcome_residuals(o: *const SirOutcome, buf: *mut f64, cap: usize, len: *mut usize) -> SirStatus {
    guard(|| {
        let o = o.as_ref().ok_or_else(|| null("o"))?;
        copy_out(&o.inner.trace.res_norms(), buf, cap, len)
    })
}

/// Writes the per-iteration trace CSV.
///
/// # Safety
/// `o` must be live and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sir_outcome_write_trace(o: *const SirOutcome, path: *const c_char) -> SirStatus {
    guard(|| {
        let o = o.as_ref().ok_or_else(|| null("o"))?;
        write_trace_csv(&o.inner.trace, str_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `o` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sir_outcome_free(o: *mut SirOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}
