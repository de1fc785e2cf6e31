//! The trace CSV schema is frozen; these bytes must not change.

use regot::bench::{parse_trace_csv, write_trace_csv, TRACE_HEADER};
use regot::trace::{SolverTrace, TraceRow};

const GOLDEN: &str = include_str!("fixtures/trace_golden.csv");

fn golden_trace() -> SolverTrace {
    let mut t = SolverTrace::default();
    let rows = [
        (0, 0.0, 5.9573387227970676, 236.29354891188268, 0.0),
        (1, 0.25, -0.1, 1.0 / 3.0, -2.5e-300),
        (
            10,
            12.345678901234567,
            std::f64::consts::PI,
            5e-324,
            f64::NAN,
        ),
    ];
    for (iter, wall_ms, f, marginal_error, duality_gap) in rows {
        t.push(TraceRow {
            iter,
            wall_ms,
            f,
            marginal_error,
            duality_gap,
        });
    }
    t
}

#[test]
fn header_is_byte_exact() {
    assert_eq!(GOLDEN.lines().next().unwrap(), TRACE_HEADER);
    assert_eq!(TRACE_HEADER, "iter,wall_ms,f,marginal_error,duality_gap");
}

#[test]
fn writer_reproduces_golden_file() {
    let mut out = Vec::new();
    write_trace_csv(&golden_trace(), &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), GOLDEN);
}

#[test]
fn golden_file_parses_back_bitwise() {
    let rows = parse_trace_csv(GOLDEN.as_bytes()).unwrap();
    let expect = golden_trace();
    assert_eq!(rows.len(), expect.rows.len());
    for (a, b) in rows.iter().zip(&expect.rows) {
        assert_eq!(a.iter, b.iter);
        for (u, v) in [
            (a.wall_ms, b.wall_ms),
            (a.f, b.f),
            (a.marginal_error, b.marginal_error),
            (a.duality_gap, b.duality_gap),
        ] {
            assert!(u.to_bits() == v.to_bits() || (u.is_nan() && v.is_nan()));
        }
    }
}
