//! Per-iteration solver records shared by every solver.

use std::time::{Duration, Instant};

use crate::dual::{duality_gap_from, fused_gradient, DualPoint, GradientResult};
use crate::problem::ProblemInstance;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub wall_ms: f64,
    pub f: f64,
    pub marginal_error: f64,
    pub duality_gap: f64,
}

impl TraceRow {
    /// Measures `x` against `p`. `g` may be passed when the gradient at `x`
    /// is already known.
    pub fn measure(
        iter: usize,
        wall_ms: f64,
        x: &DualPoint,
        p: &ProblemInstance,
        g: Option<&GradientResult>,
    ) -> Self {
        let owned;
        let g = match g {
            Some(g) => g,
            None => {
                owned = fused_gradient(x, p);
                &owned
            }
        };
        Self {
            iter,
            wall_ms,
            f: g.f,
            marginal_error: g.marginal_error(p),
            duality_gap: duality_gap_from(x, p, g),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverTrace {
    pub algo: String,
    pub problem: String,
    pub eta: f64,
    /// Hash of the solver configuration that produced the trace.
    pub config_hash: u64,
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    pub fn new(algo: impl Into<String>, p: &ProblemInstance, config_hash: u64) -> Self {
        Self {
            algo: algo.into(),
            problem: format!("{}x{}", p.n(), p.m()),
            eta: p.eta(),
            config_hash,
            rows: Vec::new(),
        }
    }

    /// Appends a row. Rows must arrive with strictly increasing `iter`.
    pub fn push(&mut self, row: TraceRow) {
        if let Some(last) = self.rows.last() {
            debug_assert!(row.iter > last.iter, "trace iterations must increase");
            debug_assert!(row.wall_ms >= last.wall_ms, "trace time must not decrease");
        }
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

/// A monotonic stopwatch that can be paused while metrics are recorded.
#[derive(Debug)]
pub(crate) struct Stopwatch {
    elapsed: Duration,
    started: Option<Instant>,
}

impl Stopwatch {
    pub(crate) fn started() -> Self {
        Self {
            elapsed: Duration::ZERO,
            started: Some(Instant::now()),
        }
    }

    pub(crate) fn pause(&mut self) {
        if let Some(t) = self.started.take() {
            self.elapsed += t.elapsed();
        }
    }

    pub(crate) fn resume(&mut self) {
        if self.started.is_none() {
            self.started = Some(Instant::now());
        }
    }

    pub(crate) fn millis(&self) -> f64 {
        let running = self.started.map_or(Duration::ZERO, |t| t.elapsed());
        (self.elapsed + running).as_secs_f64() * 1e3
    }
}

/// FNV-1a over a textual configuration description.
pub(crate) fn config_hash(description: &str) -> u64 {
    description.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
