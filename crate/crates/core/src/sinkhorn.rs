//! Log-domain Sinkhorn: exact alternating block maximization of the dual.

use crate::dual::{fused_gradient, DualPoint};
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::trace::{config_hash, SolverTrace, Stopwatch, TraceRow};

#[derive(Clone, Debug, PartialEq)]
pub struct SinkhornConfig {
    pub max_iter: usize,
    /// Record a trace row every `record_every` steps (0 records only the
    /// first and last iterate).
    pub record_every: usize,
    /// Stop early once the marginal error drops to `tol`. Zero disables
    /// the check so exactly `max_iter` steps run.
    pub tol: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            record_every: 1,
            tol: 0.0,
        }
    }
}

impl SinkhornConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("sinkhorn max_iter must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("sinkhorn tol must be non-negative".into()));
        }
        Ok(())
    }

    fn hash(&self) -> u64 {
        config_hash(&format!(
            "sinkhorn max_iter={} tol={:e}",
            self.max_iter, self.tol
        ))
    }
}

/// `log(sum(exp(v)))` with max subtraction.
pub fn logsumexp(v: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.into_iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Row half-step: makes `T 1 = a` exact.
pub fn update_alpha(alpha: &mut [f64], beta: &[f64], p: &ProblemInstance) {
    let inv_eta = 1.0 / p.eta();
    let eta = p.eta();
    for (i, (al, &a)) in alpha.iter_mut().zip(p.a()).enumerate() {
        let row = p.cost().row(i);
        let lse = logsumexp(row.iter().zip(beta).map(|(&c, &bj)| (bj - c) * inv_eta));
        *al = eta * (a.ln() - lse);
    }
}

/// Column half-step: makes `T^T 1 = b` exact.
pub fn update_beta(alpha: &[f64], beta: &mut [f64], p: &ProblemInstance) {
    let (n, m) = (p.n(), p.m());
    let inv_eta = 1.0 / p.eta();
    let eta = p.eta();
    let cost = p.cost();
    // Columns are strided in the row-major cost, so both reductions sweep rows.
    let mut max = vec![f64::NEG_INFINITY; m];
    for (i, &ai) in alpha.iter().enumerate().take(n) {
        for (mx, &c) in max.iter_mut().zip(cost.row(i)) {
            *mx = mx.max((ai - c) * inv_eta);
        }
    }
    let mut acc = vec![0.0; m];
    for (i, &ai) in alpha.iter().enumerate().take(n) {
        for ((s, &c), &mx) in acc.iter_mut().zip(cost.row(i)).zip(&max) {
            *s += ((ai - c) * inv_eta - mx).exp();
        }
    }
    for j in 0..m {
        beta[j] = eta * (p.b()[j].ln() - (max[j] + acc[j].ln()));
    }
}

/// One full Sinkhorn sweep (rows, then columns) followed by a gauge shift
/// that restores `beta[m-1] = 0`.
pub fn sinkhorn_step(x: &DualPoint, p: &ProblemInstance) -> DualPoint {
    let mut alpha = x.alpha().to_vec();
    let mut beta = x.beta().to_vec();
    update_alpha(&mut alpha, &beta, p);
    update_beta(&alpha, &mut beta, p);
    DualPoint::from_potentials(alpha, beta)
}

/// Runs `steps` Sinkhorn sweeps from `x`.
pub fn sinkhorn_steps(x: &DualPoint, p: &ProblemInstance, steps: usize) -> DualPoint {
    let mut cur = x.clone();
    for _ in 0..steps {
        cur = sinkhorn_step(&cur, p);
    }
    cur
}

/// Runs Sinkhorn for `cfg.max_iter` sweeps (or until `cfg.tol`), recording
/// the iterate at `iter = 0`, every `record_every` sweeps and at the end.
pub fn run_sinkhorn(
    x0: &DualPoint,
    p: &ProblemInstance,
    cfg: &SinkhornConfig,
) -> Result<(DualPoint, SolverTrace)> {
    cfg.validate()?;
    let mut trace = SolverTrace::new("sinkhorn", p, cfg.hash());
    let mut clock = Stopwatch::started();
    let mut x = x0.clone();

    clock.pause();
    let first = TraceRow::measure(0, clock.millis(), &x, p, None);
    trace.push(first);
    let mut done = cfg.tol > 0.0 && first.marginal_error <= cfg.tol;
    clock.resume();

    let mut iter = 0;
    while !done && iter < cfg.max_iter {
        x = sinkhorn_step(&x, p);
        iter += 1;
        let record = cfg.record_every > 0 && iter % cfg.record_every == 0;
        let last = iter == cfg.max_iter;
        if record || last || cfg.tol > 0.0 {
            clock.pause();
            let g = fused_gradient(&x, p);
            let err = g.marginal_error(p);
            done = cfg.tol > 0.0 && err <= cfg.tol;
            if record || last || done {
                trace.push(TraceRow::measure(iter, clock.millis(), &x, p, Some(&g)));
            }
            clock.resume();
        }
    }
    Ok((x, trace))
}
