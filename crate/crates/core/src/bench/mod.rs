//! Benchmark harness: timed multi-run solves, median aggregation, CSV
//! traces and SVG error-versus-time plots.
//!
//! A [`BenchSpec`] is read from a flat keyfile of `key = value` lines whose
//! keys match the `regot solve` flags, plus a few benchmark-only keys:
//!
//! ```text
//! # Synthetic II at small eta
//! problem = synth2
//! n = 256
//! m = 256
//! eta = 0.001
//! algo = sinkhorn, splr
//! checkpoints = 10, 50, 200
//! repeats = 3
//! ```
//!
//! For every algorithm and checkpoint, [`run_benchmark`] solves the
//! instance from scratch for exactly that many iterations (tolerance
//! zero), `warmup` times untimed and `repeats` times timed, and reports
//! the medians.

mod csv;
mod plot;
mod run;
mod spec;

pub use self::csv::{
    emit_csv, emit_report_csv, format_float, parse_report_csv, parse_trace_csv, write_report_csv,
    write_trace_csv, REPORT_HEADER, TRACE_HEADER,
};
pub use plot::{emit_svg_plot, render_svg, Metric};
pub use run::{
    median, run_benchmark, run_solver, BenchCell, BenchReport, ReportRow, RunMeasurement,
};
pub use spec::{parse_keyfile, problem_from_arg, Algorithm, BenchSpec};
