use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::{SolverTrace, TraceRow};

use super::run::ReportRow;

/// Column header of a solver trace.
pub const TRACE_HEADER: &str = "iter,wall_ms,f,marginal_error,duality_gap";

/// Column header of a benchmark report: the trace columns keyed by
/// algorithm.
pub const REPORT_HEADER: &str = "algo,iter,wall_ms,f,marginal_error,duality_gap";

/// Formats `v` with 17 significant digits, enough to round-trip any
/// `f64`. Non-finite values print as `NaN`, `inf` and `-inf`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn csv_err(e: ::csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

fn write_rows<W: Write>(
    out: W,
    header: &str,
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let io_err = |e: ::csv::Error| Error::io("<csv output>", io::Error::from(e));
    let mut w = ::csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header.split(',')).map_err(io_err)?;
    for r in rows {
        w.write_record(&r).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

fn trace_fields(r: &TraceRow) -> Vec<String> {
    vec![
        r.iter.to_string(),
        format_float(r.wall_ms),
        format_float(r.f),
        format_float(r.marginal_error),
        format_float(r.duality_gap),
    ]
}

pub fn write_trace_csv<W: Write>(trace: &SolverTrace, out: W) -> Result<()> {
    write_rows(out, TRACE_HEADER, trace.rows.iter().map(trace_fields))
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    write_rows(
        out,
        REPORT_HEADER,
        rows.iter().map(|r| {
            let mut fields = vec![r.algo.clone()];
            fields.extend(trace_fields(&TraceRow {
                iter: r.iter,
                wall_ms: r.wall_ms,
                f: r.f,
                marginal_error: r.marginal_error,
                duality_gap: r.duality_gap,
            }));
            fields
        }),
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, res: Result<()>) -> Result<()> {
    res.map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Writes a solver trace as CSV.
pub fn emit_csv(trace: &SolverTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let out = create(path)?;
    finish(path, write_trace_csv(trace, out))
}

/// Writes benchmark report rows as CSV.
pub fn emit_report_csv(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let out = create(path)?;
    finish(path, write_report_csv(rows, out))
}

fn read_records<R: Read>(input: R, header: &str) -> Result<Vec<::csv::StringRecord>> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::All)
        .from_reader(input);
    let found = rdr.headers().map_err(csv_err)?;
    let found: Vec<&str> = found.iter().collect();
    if found.join(",") != header {
        return Err(Error::Parse(format!(
            "unexpected csv header {:?}, expected {header:?}",
            found.join(",")
        )));
    }
    rdr.records().map(|r| r.map_err(csv_err)).collect()
}

fn field<T: std::str::FromStr>(rec: &::csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::Parse(format!("bad {name} value {raw:?}")))
}

fn trace_row(rec: &::csv::StringRecord, offset: usize) -> Result<TraceRow> {
    Ok(TraceRow {
        iter: field(rec, offset, "iter")?,
        wall_ms: field(rec, offset + 1, "wall_ms")?,
        f: field(rec, offset + 2, "f")?,
        marginal_error: field(rec, offset + 3, "marginal_error")?,
        duality_gap: field(rec, offset + 4, "duality_gap")?,
    })
}

/// Reads trace rows written by [`write_trace_csv`].
pub fn parse_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    read_records(input, TRACE_HEADER)?
        .iter()
        .map(|rec| trace_row(rec, 0))
        .collect()
}

/// Reads report rows written by [`write_report_csv`].
pub fn parse_report_csv<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    read_records(input, REPORT_HEADER)?
        .iter()
        .map(|rec| {
            let r = trace_row(rec, 1)?;
            Ok(ReportRow {
                algo: rec.get(0).unwrap_or("").to_string(),
                iter: r.iter,
                wall_ms: r.wall_ms,
                f: r.f,
                marginal_error: r.marginal_error,
                duality_gap: r.duality_gap,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> SolverTrace {
        let mut t = SolverTrace::default();
        t.push(TraceRow {
            iter: 0,
            wall_ms: 0.0,
            f: -0.1,
            marginal_error: 1.0 / 3.0,
            duality_gap: -2.5e-300,
        });
        t.push(TraceRow {
            iter: 7,
            wall_ms: 12.345678901234567,
            f: std::f64::consts::PI,
            marginal_error: 5e-324,
            duality_gap: f64::NAN,
        });
        t
    }

    #[test]
    fn empty_trace_is_header_only() {
        let mut buf = Vec::new();
        write_trace_csv(&SolverTrace::default(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{TRACE_HEADER}\n"));
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "NaN");
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn trace_round_trip_is_bitwise() {
        let t = sample_trace();
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let back = parse_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), t.rows.len());
        for (a, b) in back.iter().zip(&t.rows) {
            assert_eq!(a.iter, b.iter);
            assert_eq!(a.wall_ms.to_bits(), b.wall_ms.to_bits());
            assert_eq!(a.f.to_bits(), b.f.to_bits());
            assert_eq!(a.marginal_error.to_bits(), b.marginal_error.to_bits());
            assert!(
                a.duality_gap.to_bits() == b.duality_gap.to_bits()
                    || (a.duality_gap.is_nan() && b.duality_gap.is_nan())
            );
        }
    }

    #[test]
    fn report_round_trip() {
        let rows = vec![ReportRow {
            algo: "splr".into(),
            iter: 10,
            wall_ms: 1.5,
            f: -0.25,
            marginal_error: 1e-9,
            duality_gap: 3e-11,
        }];
        let mut buf = Vec::new();
        write_report_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("{REPORT_HEADER}\n")));
        assert_eq!(parse_report_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(parse_trace_csv("iter,f\n1,2\n".as_bytes()).is_err());
        assert!(parse_report_csv(format!("{TRACE_HEADER}\n").as_bytes()).is_err());
        let bad = format!("{TRACE_HEADER}\n1,x,2,3,4\n");
        assert!(parse_trace_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let err = emit_csv(&sample_trace(), "/nonexistent-dir/trace.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
