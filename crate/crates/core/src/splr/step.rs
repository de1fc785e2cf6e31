use std::sync::Arc;
use std::thread;

use crate::dual::{evaluate_step, fused_gradient, plan, DualPoint, GradientResult};
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::sinkhorn::sinkhorn_steps;
use crate::sparse_chol::{numeric_factorize, symbolic_analyze, NumericFactor, SymbolicFactor};
use crate::sparsify::{assemble_with, density_to_k, select_topk, SparseSym, SparsityPattern};
use crate::trace::{SolverTrace, Stopwatch, TraceRow};

use super::config::{Execution, SplrConfig};
use super::direction::{compute_direction, DirectionKind};
use super::line_search::{line_search, Trial, WolfeCertificate};
use super::low_rank::{build_low_rank, LowRankTerm};

/// Iterate, gradient and the cached sparse structures carried between
/// iterations.
#[derive(Clone, Debug)]
pub struct SplrState {
    n: usize,
    x: Vec<f64>,
    eval: GradientResult,
    prev: Option<(Vec<f64>, Vec<f64>)>,
    omega: Option<SparsityPattern>,
    symbolic: Option<Arc<SymbolicFactor>>,
    matrix: Option<SparseSym>,
    factor: Option<NumericFactor>,
    iter: usize,
}

impl SplrState {
    pub fn new(x0: &DualPoint, p: &ProblemInstance) -> Self {
        let eval = fused_gradient(x0, p);
        Self {
            n: p.n(),
            x: x0.to_free(),
            eval,
            prev: None,
            omega: None,
            symbolic: None,
            matrix: None,
            factor: None,
            iter: 0,
        }
    }

    pub fn point(&self) -> DualPoint {
        DualPoint::from_free(&self.x, self.n)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn x_prev(&self) -> Option<&[f64]> {
        self.prev.as_ref().map(|(x, _)| x.as_slice())
    }

    pub fn g_prev(&self) -> Option<&[f64]> {
        self.prev.as_ref().map(|(_, g)| g.as_slice())
    }

    /// Objective and gradient at the current iterate.
    pub fn eval(&self) -> &GradientResult {
        &self.eval
    }

    pub fn iter(&self) -> usize {
        self.iter
    }

    pub fn omega(&self) -> Option<&SparsityPattern> {
        self.omega.as_ref()
    }

    pub fn symbolic(&self) -> Option<&Arc<SymbolicFactor>> {
        self.symbolic.as_ref()
    }

    /// `H_Omega + tau I` as assembled in the last iteration.
    pub fn matrix(&self) -> Option<&SparseSym> {
        self.matrix.as_ref()
    }

    /// `s = x - x_prev`, recomputed from the stored iterates.
    pub fn s_minus(&self) -> Option<Vec<f64>> {
        self.prev
            .as_ref()
            .map(|(xp, _)| self.x.iter().zip(xp).map(|(a, b)| a - b).collect())
    }

    /// `y = g - g_prev`, recomputed from the stored gradients.
    pub fn y_minus(&self) -> Option<Vec<f64>> {
        self.prev
            .as_ref()
            .map(|(_, gp)| self.eval.grad.iter().zip(gp).map(|(a, b)| a - b).collect())
    }
}

/// Which candidate became the next iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Candidate {
    QuasiNewton,
    Sinkhorn,
}

/// Diagnostic record of one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    /// Iteration index `k` (the step from `x_k` to `x_{k+1}`).
    pub iter: usize,
    pub refresh: bool,
    pub tau: f64,
    pub tau_retries: usize,
    pub low_rank_active: bool,
    pub direction: DirectionKind,
    pub f_before: f64,
    pub wolfe: WolfeCertificate,
    /// `f(x^q)`.
    pub f_quasi_newton: f64,
    /// `f(x^s)` at refresh iterations with candidates enabled.
    pub f_sinkhorn: Option<f64>,
    pub chosen: Candidate,
    pub f_after: f64,
    pub omega_len: usize,
}

/// Refresh-iteration work: symbolic analysis of the new pattern and the
/// Sinkhorn candidate chain from the same snapshot.
fn refresh_tasks(
    a: &SparseSym,
    x: &DualPoint,
    p: &ProblemInstance,
    steps: usize,
    execution: Execution,
) -> (Result<SymbolicFactor>, Option<DualPoint>) {
    let chain = |x: &DualPoint| (steps > 0).then(|| sinkhorn_steps(x, p, steps));
    match execution {
        Execution::Serial => (symbolic_analyze(a), chain(x)),
        Execution::Overlapped => thread::scope(|scope| {
            let worker = scope.spawn(|| chain(x));
            let sym = symbolic_analyze(a);
            let cand = worker.join().expect("sinkhorn candidate task panicked");
            (sym, cand)
        }),
    }
}

/// One SPLR iteration.
///
/// Refresh iterations (`iter % S == 0`) select a new top-k pattern, redo
/// the symbolic analysis while a Sinkhorn candidate is generated from the
/// same iterate, and keep whichever of the Sinkhorn and quasi-Newton
/// candidates has the smaller objective (Sinkhorn on ties). Other
/// iterations refresh only the numeric values on the cached pattern.
pub fn splr_step(
    state: &mut SplrState,
    p: &ProblemInstance,
    cfg: &SplrConfig,
) -> Result<StepRecord> {
    let k = state.iter;
    let refresh = k.is_multiple_of(cfg.refresh_period) || state.symbolic.is_none();
    let xdp = state.point();
    let g = state.eval.clone();
    let gnorm = g.grad_norm();
    let mut tau = cfg.tau_max.min(gnorm);

    let mut candidate = None;
    if refresh {
        let t = plan(&xdp, p);
        let omega = select_topk(&t, density_to_k(cfg.density, p.n(), p.m()));
        let a = assemble_with(&xdp, p, &omega, tau, &g);
        let (sym, cand) = refresh_tasks(&a, &xdp, p, cfg.sinkhorn_candidates, cfg.execution);
        let sym = Arc::new(sym?);
        state.omega = Some(omega);
        state.symbolic = Some(sym);
        state.matrix = Some(a);
        state.factor = None;
        candidate = cand;
    } else {
        let a = state
            .matrix
            .as_mut()
            .expect("cached matrix after first refresh");
        a.update_values_with(&xdp, p, tau, &g)?;
    }

    let sym = Arc::clone(state.symbolic.as_ref().expect("symbolic factor present"));
    let mut retries = 0;
    loop {
        let a = state.matrix.as_ref().expect("matrix present");
        let res = match state.factor.as_mut() {
            Some(f) => f.refactorize(a),
            None => numeric_factorize(&sym, a).map(|f| {
                state.factor = Some(f);
            }),
        };
        match res {
            Ok(()) => break,
            Err(Error::NotPositiveDefinite { .. }) if retries < cfg.max_tau_retries => {
                retries += 1;
                tau = if tau > 0.0 {
                    2.0 * tau
                } else {
                    f64::EPSILON.max(1e-12 * gnorm)
                };
                log::debug!("iteration {k}: tiny pivot, retrying with tau = {tau:e}");
                let a = state.matrix.as_mut().expect("matrix present");
                a.update_values_with(&xdp, p, tau, &g)?;
            }
            Err(e) => {
                state.factor = None;
                return Err(e);
            }
        }
    }
    let a = state.matrix.as_ref().expect("matrix present");
    let factor = state.factor.as_ref().expect("factor present");

    let low_rank = match (state.s_minus(), state.y_minus()) {
        (Some(s), Some(y)) => build_low_rank(&s, &y, a),
        _ => LowRankTerm::inactive(),
    };
    let (d, direction) = compute_direction(factor, &low_rank, &g.grad)?;
    let ls = line_search(
        |gamma| {
            let se = evaluate_step(&xdp, &d, gamma, p, &g.grad);
            Trial {
                x_plus: se.point.to_free(),
                eval: se.eval,
                decrease: se.decrease,
            }
        },
        &d,
        g.f,
        &g.grad,
        cfg.c1,
        cfg.c2,
        cfg.max_ls_trials,
    )?;
    let f_q = ls.eval.f;

    let mut chosen = Candidate::QuasiNewton;
    let mut next_x = ls.x_plus;
    let mut next_eval = ls.eval;
    let mut f_s = None;
    if let Some(xs) = candidate {
        let es = fused_gradient(&xs, p);
        f_s = Some(es.f);
        if es.f <= f_q {
            chosen = Candidate::Sinkhorn;
            next_x = xs.to_free();
            next_eval = es;
        }
    }

    let record = StepRecord {
        iter: k,
        refresh,
        tau,
        tau_retries: retries,
        low_rank_active: low_rank.active,
        direction,
        f_before: g.f,
        wolfe: ls.certificate,
        f_quasi_newton: f_q,
        f_sinkhorn: f_s,
        chosen,
        f_after: next_eval.f,
        omega_len: state.omega.as_ref().map_or(0, SparsityPattern::len),
    };
    let old_x = std::mem::replace(&mut state.x, next_x);
    let old_eval = std::mem::replace(&mut state.eval, next_eval);
    state.prev = Some((old_x, old_eval.grad));
    state.iter += 1;
    Ok(record)
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct SplrRun {
    pub x: DualPoint,
    pub trace: SolverTrace,
    pub steps: Vec<StepRecord>,
    /// The run stopped because no further decrease was representable in
    /// floating point.
    pub stalled: bool,
}

/// A failed run, with everything recorded before the failure.
#[derive(Debug, thiserror::Error)]
#[error("SPLR failed at iteration {iter}: {source}")]
pub struct SplrFailure {
    pub iter: usize,
    #[source]
    pub source: Error,
    pub trace: SolverTrace,
    pub steps: Vec<StepRecord>,
}

/// Whether a line-search failure means the iterate is already at the
/// floating-point floor: the predicted decrease `|g^T d|` is below the
/// resolution of `f`.
fn at_precision_floor(eval: &GradientResult) -> bool {
    let f = eval.f;
    let g2: f64 = eval.grad.iter().map(|v| v * v).sum();
    g2 <= 64.0 * f64::EPSILON * (1.0 + f.abs())
}

/// Runs SPLR until the marginal error reaches `cfg.tol` or `cfg.max_iter`
/// iterations, keeping the per-step diagnostics.
// The failure deliberately carries the partial trace and step log.
#[allow(clippy::result_large_err)]
pub fn run_splr_detailed(
    x0: &DualPoint,
    p: &ProblemInstance,
    cfg: &SplrConfig,
) -> std::result::Result<SplrRun, SplrFailure> {
    let fail = |iter, source, trace, steps| SplrFailure {
        iter,
        source,
        trace,
        steps,
    };
    let mut trace = SolverTrace::new("splr", p, cfg.hash());
    if let Err(e) = cfg.validate() {
        return Err(fail(0, e, trace, Vec::new()));
    }
    let mut clock = Stopwatch::started();
    let mut state = SplrState::new(x0, p);
    clock.pause();
    let mut err = state.eval.marginal_error(p);
    trace.push(TraceRow::measure(
        0,
        clock.millis(),
        &state.point(),
        p,
        Some(&state.eval),
    ));
    clock.resume();

    let mut steps = Vec::new();
    let mut stalled = false;
    while state.iter < cfg.max_iter && !(cfg.tol > 0.0 && err <= cfg.tol) {
        match splr_step(&mut state, p, cfg) {
            Ok(rec) => steps.push(rec),
            Err(Error::LineSearch { .. }) if at_precision_floor(&state.eval) => {
                log::info!(
                    "SPLR stalled at iteration {} with marginal error {err:e}",
                    state.iter
                );
                stalled = true;
                break;
            }
            Err(e) => {
                clock.pause();
                return Err(fail(state.iter, e, trace, steps));
            }
        }
        err = state.eval.marginal_error(p);
        let it = state.iter;
        let record = (cfg.record_every > 0 && it.is_multiple_of(cfg.record_every))
            || it == cfg.max_iter
            || (cfg.tol > 0.0 && err <= cfg.tol);
        if record {
            clock.pause();
            trace.push(TraceRow::measure(
                it,
                clock.millis(),
                &state.point(),
                p,
                Some(&state.eval),
            ));
            clock.resume();
        }
    }
    if stalled && trace.last().is_none_or(|r| r.iter != state.iter) {
        clock.pause();
        trace.push(TraceRow::measure(
            state.iter,
            clock.millis(),
            &state.point(),
            p,
            Some(&state.eval),
        ));
    }
    Ok(SplrRun {
        x: state.point(),
        trace,
        steps,
        stalled,
    })
}

/// Runs SPLR and returns the final point and its trace.
pub fn run_splr(
    x0: &DualPoint,
    p: &ProblemInstance,
    cfg: &SplrConfig,
) -> Result<(DualPoint, SolverTrace)> {
    run_splr_detailed(x0, p, cfg)
        .map(|r| (r.x, r.trace))
        .map_err(|f| Error::Step {
            iter: f.iter,
            source: Box::new(f.source),
        })
}
