//! Per-iteration trace CSV.

use std::path::Path;

use super::atomic_write;
use crate::error::{Error, Result};
use crate::krylov::InnerSolveStats;
use crate::refine::{ErrorMetrics, IterRecord, IterTrace};

/// Column order. The first seven columns are the stable core schema; the
/// rest are extra diagnostics.
pub const TRACE_COLUMNS: [&str; 16] = [
    "iter",
    "res_norm",
    "err_norm",
    "alpha_or_cnorm",
    "inner_iters",
    "inner_relres",
    "diverged_flag",
    "rel_res",
    "inner_matvecs",
    "breakdown",
    "identity_check",
    "backward_err_proxy",
    "true_res_norm",
    "ferr",
    "nbe",
    "cbe",
];

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

/// Renders the trace as CSV (LF line endings, header always present).
pub fn format_trace_csv(trace: &IterTrace) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(TRACE_COLUMNS)?;
    for r in &trace.records {
        let inner = r.inner.as_ref();
        w.write_record([
            r.iter.to_string(),
            num(r.res_norm),
            opt(r.err_norm),
            opt(r.step),
            inner.map(|s| s.iterations.to_string()).unwrap_or_default(),
            opt(inner.map(|s| s.relres)),
            flag(r.diverged),
            num(r.rel_res),
            inner.map(|s| s.matvecs.to_string()).unwrap_or_default(),
            inner.map(|s| flag(s.breakdown)).unwrap_or_default(),
            opt(r.identity_check),
            opt(r.backward_err_proxy),
            opt(r.true_res_norm),
            opt(r.metrics.map(|m| m.ferr)),
            opt(r.metrics.map(|m| m.nbe)),
            opt(r.metrics.map(|m| m.cbe)),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes the trace CSV through a temporary file and a rename.
pub fn write_trace_csv(trace: &IterTrace, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), &format_trace_csv(trace)?)
}

/// Reads a file written by [`write_trace_csv`] back into records.
pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<IterRecord>> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_trace_csv(file)
}

pub fn parse_trace_csv(reader: impl std::io::Read) -> Result<Vec<IterRecord>> {
    let mut rd = csv::Reader::from_reader(reader);
    let headers = rd.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("missing column `{name}`") })
    };
    let idx: Vec<usize> = TRACE_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let f = |k: usize| -> Result<Option<f64>> {
            let s = field(k);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| Error::Parse { line, msg: format!("bad number `{s}` in `{}`", TRACE_COLUMNS[k]) })
        };
        let u = |k: usize| -> Result<Option<usize>> {
            let s = field(k);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| Error::Parse { line, msg: format!("bad integer `{s}` in `{}`", TRACE_COLUMNS[k]) })
        };
        let required = |v: Option<f64>, k: usize| {
            v.ok_or_else(|| Error::Parse { line, msg: format!("empty `{}`", TRACE_COLUMNS[k]) })
        };
        let inner = match u(4)? {
            Some(iterations) => Some(InnerSolveStats {
                iterations,
                relres: f(5)?.unwrap_or(f64::NAN),
                matvecs: u(8)?.unwrap_or(0),
                breakdown: u(9)? == Some(1),
            }),
            None => None,
        };
        let metrics = match (f(13)?, f(14)?, f(15)?) {
            (Some(ferr), Some(nbe), Some(cbe)) => Some(ErrorMetrics { ferr, nbe, cbe }),
            _ => None,
        };
        out.push(IterRecord {
            iter: u(0)?.ok_or_else(|| Error::Parse { line, msg: "empty `iter`".into() })?,
            res_norm: required(f(1)?, 1)?,
            rel_res: required(f(7)?, 7)?,
            err_norm: f(2)?,
            step: f(3)?,
            inner,
            identity_check: f(10)?,
            backward_err_proxy: f(11)?,
            true_res_norm: f(12)?,
            metrics,
            diverged: u(6)? == Some(1),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_is_header_only() {
        let s = String::from_utf8(format_trace_csv(&IterTrace::new()).unwrap()).unwrap();
        assert_eq!(s, format!("{}\n", TRACE_COLUMNS.join(",")));
    }

    #[test]
    fn round_trip_in_memory() {
        let mut t = IterTrace::new();
        t.records.push(IterRecord { iter: 0, res_norm: 1.0, rel_res: 1.0, ..Default::default() });
        t.records.push(IterRecord {
            iter: 1,
            res_norm: 0.1,
            rel_res: 0.1,
            err_norm: Some(1.0 / 3.0),
            step: Some(-0.7),
            inner: Some(InnerSolveStats { iterations: 4, relres: 1e-7, matvecs: 5, breakdown: true }),
            identity_check: Some(-1e-17),
            backward_err_proxy: Some(2e-3),
            true_res_norm: Some(0.1000001),
            metrics: Some(ErrorMetrics { ferr: 1e-300, nbe: 0.0, cbe: 5e-324 }),
            diverged: true,
        });
        let bytes = format_trace_csv(&t).unwrap();
        assert_eq!(parse_trace_csv(bytes.as_slice()).unwrap(), t.records);
    }
}
