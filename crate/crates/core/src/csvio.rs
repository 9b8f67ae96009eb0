//! CSV emission and ingestion.
//!
//! Trace files carry the header `t,v,v_g,i,w_eff,w_raw`; reference files
//! carry `t,v,i`. Floats are written with 17 significant digits so a
//! written file re-reads to the same values.

use crate::metrics::ReferenceTrace;
use crate::transient::Trace;
use std::io::{self, BufRead, Write};
use thiserror::Error;

pub const TRACE_HEADER: &str = "t,v,v_g,i,w_eff,w_raw";
pub const REFERENCE_HEADER: &str = "t,v,i";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("missing header line")]
    MissingHeader,
    #[error("header `{0}` lacks required columns t, v, i")]
    BadHeader(String),
    #[error("line {line}: {msg}")]
    BadField { line: usize, msg: String },
    #[error("file contains no data rows")]
    Empty,
    #[error(transparent)]
    Reference(#[from] crate::metrics::MetricsError),
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a full trace with the exact `t,v,v_g,i,w_eff,w_raw` schema.
pub fn write_trace(mut out: impl Write, trace: &Trace) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for s in &trace.samples {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt(s.t),
            fmt(s.v),
            fmt(s.v_g),
            fmt(s.i),
            fmt(s.w_eff),
            fmt(s.w_raw)
        )?;
    }
    Ok(())
}

/// Write a (t, v, i) series with the reference schema.
pub fn write_reference(mut out: impl Write, series: &[(f64, f64, f64)]) -> io::Result<()> {
    writeln!(out, "{REFERENCE_HEADER}")?;
    for &(t, v, i) in series {
        writeln!(out, "{},{},{}", fmt(t), fmt(v), fmt(i))?;
    }
    Ok(())
}

/// Read a (t, v, i) series from either schema; extra columns (a full trace
/// file) are dropped by header-driven column lookup.
pub fn read_reference(input: impl BufRead) -> Result<ReferenceTrace, CsvError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(CsvError::MissingHeader)??;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let want = |name: &str| columns.iter().position(|&c| c == name);
    let (ti, vi, ii) = match (want("t"), want("v"), want("i")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(CsvError::BadHeader(header)),
    };
    let mut samples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line_no = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let need = ti.max(vi).max(ii);
        if fields.len() <= need {
            return Err(CsvError::BadField {
                line: line_no,
                msg: format!(
                    "expected at least {} columns, got {}",
                    need + 1,
                    fields.len()
                ),
            });
        }
        let parse = |s: &str| -> Result<f64, CsvError> {
            s.parse::<f64>().map_err(|_| CsvError::BadField {
                line: line_no,
                msg: format!("`{s}` is not a number"),
            })
        };
        samples.push((parse(fields[ti])?, parse(fields[vi])?, parse(fields[ii])?));
    }
    if samples.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(ReferenceTrace::new(samples)?)
}
