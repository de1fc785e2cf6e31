use std::thread;

use crate::dual::DualPoint;
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::sinkhorn::{run_sinkhorn, SinkhornConfig};
use crate::splr::{run_splr_detailed, SplrConfig};
use crate::trace::{SolverTrace, TraceRow};

use super::spec::{Algorithm, BenchSpec};

/// Median of a non-empty sample; the mean of the two middle values for
/// even sizes.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Runs `algo` from `x = 0` for exactly `iterations` iterations with the
/// convergence test disabled, recording only the first and last iterate.
pub fn run_solver(
    algo: Algorithm,
    p: &ProblemInstance,
    splr: &SplrConfig,
    iterations: usize,
) -> Result<SolverTrace> {
    let x0 = DualPoint::zeros(p.n(), p.m());
    match algo {
        Algorithm::Sinkhorn => {
            let cfg = SinkhornConfig {
                max_iter: iterations,
                record_every: 0,
                tol: 0.0,
            };
            run_sinkhorn(&x0, p, &cfg).map(|(_, trace)| trace)
        }
        Algorithm::Splr => {
            let cfg = SplrConfig {
                max_iter: iterations,
                tol: 0.0,
                record_every: 0,
                ..splr.clone()
            };
            match run_splr_detailed(&x0, p, &cfg) {
                Ok(run) => {
                    if run.stalled {
                        log::warn!(
                            "SPLR reached the floating-point floor before {iterations} iterations"
                        );
                    }
                    Ok(run.trace)
                }
                Err(f) => Err(Error::Step {
                    iter: f.iter,
                    source: Box::new(f.source),
                }),
            }
        }
    }
}

/// One timed solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunMeasurement {
    /// Solver time, excluding metric evaluation.
    pub wall_ms: f64,
    pub f: f64,
    pub marginal_error: f64,
    pub duality_gap: f64,
    /// Iterations actually performed.
    pub iterations: usize,
}

impl From<&TraceRow> for RunMeasurement {
    fn from(r: &TraceRow) -> Self {
        Self {
            wall_ms: r.wall_ms,
            f: r.f,
            marginal_error: r.marginal_error,
            duality_gap: r.duality_gap,
            iterations: r.iter,
        }
    }
}

/// All repeats of one (algorithm, checkpoint) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchCell {
    pub algo: Algorithm,
    pub checkpoint: usize,
    /// Timed repeats; warmup runs are not included.
    pub runs: Vec<RunMeasurement>,
    /// Set when any run failed; the cell then reports NaN.
    pub failure: Option<String>,
}

/// One line of the benchmark report: medians over the repeats.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub algo: String,
    pub iter: usize,
    pub wall_ms: f64,
    pub f: f64,
    pub marginal_error: f64,
    pub duality_gap: f64,
}

impl BenchCell {
    pub fn summary(&self) -> ReportRow {
        let med = |pick: fn(&RunMeasurement) -> f64| {
            if self.failure.is_some() || self.runs.is_empty() {
                f64::NAN
            } else {
                median(&self.runs.iter().map(pick).collect::<Vec<_>>())
            }
        };
        ReportRow {
            algo: self.algo.to_string(),
            iter: self.checkpoint,
            wall_ms: med(|r| r.wall_ms),
            f: med(|r| r.f),
            marginal_error: med(|r| r.marginal_error),
            duality_gap: med(|r| r.duality_gap),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub problem: String,
    pub eta: f64,
    /// Ordered by algorithm (as listed in the spec), then checkpoint.
    pub cells: Vec<BenchCell>,
}

impl BenchReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        self.cells.iter().map(BenchCell::summary).collect()
    }
}

fn measure(
    algo: Algorithm,
    p: &ProblemInstance,
    splr: &SplrConfig,
    iters: usize,
) -> Result<RunMeasurement> {
    let trace = run_solver(algo, p, splr, iters)?;
    let last = trace
        .last()
        .ok_or_else(|| Error::Config("solver produced an empty trace".into()))?;
    Ok(RunMeasurement::from(last))
}

/// Runs the benchmark described by `spec`. Solver failures are recorded in
/// the affected cell and the benchmark continues.
pub fn run_benchmark(spec: &BenchSpec) -> Result<BenchReport> {
    spec.validate()?;
    let p = spec.generator.generate(Some(spec.eta))?;
    let mut cells = Vec::new();
    for &algo in &spec.algorithms {
        for &checkpoint in &spec.checkpoints {
            log::info!("bench: {algo} for {checkpoint} iterations");
            let mut failure = None;
            for _ in 0..spec.warmup {
                if let Err(e) = measure(algo, &p, &spec.splr, checkpoint) {
                    failure = Some(e.to_string());
                    break;
                }
            }
            let results: Vec<Result<RunMeasurement>> = if failure.is_some() {
                Vec::new()
            } else if spec.parallel_repeats {
                thread::scope(|scope| {
                    let handles: Vec<_> = (0..spec.repeats)
                        .map(|_| scope.spawn(|| measure(algo, &p, &spec.splr, checkpoint)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("benchmark repeat panicked"))
                        .collect()
                })
            } else {
                (0..spec.repeats)
                    .map(|_| measure(algo, &p, &spec.splr, checkpoint))
                    .collect()
            };
            let mut runs = Vec::with_capacity(results.len());
            for r in results {
                match r {
                    Ok(m) => runs.push(m),
                    Err(e) => {
                        failure.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            if let Some(msg) = &failure {
                log::warn!("bench: {algo} at {checkpoint} iterations failed: {msg}");
            }
            cells.push(BenchCell {
                algo,
                checkpoint,
                runs,
                failure,
            });
        }
    }
    Ok(BenchReport {
        problem: spec.generator.describe(),
        eta: spec.eta,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{GeneratorKind, GeneratorSpec};

    #[test]
    fn median_examples() {
        assert_eq!(median(&[4.5]), 4.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    fn small_spec() -> BenchSpec {
        BenchSpec {
            generator: GeneratorSpec {
                kind: GeneratorKind::Synth2,
                n: 24,
                m: 20,
                ..GeneratorSpec::default()
            },
            eta: 0.05,
            checkpoints: vec![3, 8],
            repeats: 3,
            warmup: 1,
            ..BenchSpec::default()
        }
    }

    #[test]
    fn report_shape_and_determinism() {
        let report = run_benchmark(&small_spec()).unwrap();
        assert_eq!(report.cells.len(), 4);
        for cell in &report.cells {
            assert!(cell.failure.is_none());
            assert_eq!(cell.runs.len(), 3);
            let first = cell.runs[0];
            for r in &cell.runs {
                assert_eq!(r.marginal_error.to_bits(), first.marginal_error.to_bits());
                assert_eq!(r.f.to_bits(), first.f.to_bits());
                assert_eq!(r.duality_gap.to_bits(), first.duality_gap.to_bits());
            }
        }
        let rows = report.rows();
        let algos: Vec<(&str, usize)> = rows.iter().map(|r| (r.algo.as_str(), r.iter)).collect();
        assert_eq!(
            algos,
            vec![("sinkhorn", 3), ("sinkhorn", 8), ("splr", 3), ("splr", 8)]
        );
        // both solvers are monotone in the error at these budgets
        assert!(rows[1].marginal_error <= rows[0].marginal_error);
        assert!(rows[3].marginal_error <= rows[2].marginal_error);
    }

    #[test]
    fn single_repeat_median_is_the_measurement() {
        let spec = BenchSpec {
            repeats: 1,
            warmup: 0,
            algorithms: vec![Algorithm::Sinkhorn],
            ..small_spec()
        };
        let report = run_benchmark(&spec).unwrap();
        for cell in &report.cells {
            let row = cell.summary();
            assert_eq!(row.wall_ms, cell.runs[0].wall_ms);
            assert_eq!(row.marginal_error, cell.runs[0].marginal_error);
        }
    }

    #[test]
    fn parallel_repeats_match_sequential_errors() {
        let seq = run_benchmark(&small_spec()).unwrap();
        let par = run_benchmark(&BenchSpec {
            parallel_repeats: true,
            ..small_spec()
        })
        .unwrap();
        for (a, b) in seq.rows().iter().zip(par.rows()) {
            assert_eq!(a.marginal_error.to_bits(), b.marginal_error.to_bits());
        }
    }

    #[test]
    fn failed_cells_report_nan_and_continue() {
        let spec = BenchSpec {
            generator: GeneratorSpec {
                kind: GeneratorKind::File,
                path: Some("/nonexistent/problem.rotb".into()),
                ..GeneratorSpec::default()
            },
            ..small_spec()
        };
        // an unreadable problem is a setup error, not a failed cell
        assert!(run_benchmark(&spec).is_err());

        let cell = BenchCell {
            algo: Algorithm::Splr,
            checkpoint: 5,
            runs: Vec::new(),
            failure: Some("boom".into()),
        };
        let row = cell.summary();
        assert!(row.marginal_error.is_nan() && row.wall_ms.is_nan());
    }
}
