use crate::error::{Error, Result};
use crate::trace::config_hash;

/// How the two refresh-iteration tasks (symbolic analysis and the Sinkhorn
/// candidate chain) are scheduled. Both modes produce identical results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// Run the analysis, then the candidate chain, on the calling thread.
    #[default]
    Serial,
    /// Run the candidate chain on a scoped worker thread while the calling
    /// thread performs the symbolic analysis.
    Overlapped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplrConfig {
    /// Cap on the diagonal shift, `tau = min(tau_max, |g|)`.
    pub tau_max: f64,
    /// Symbolic analysis is redone every `refresh_period` iterations.
    pub refresh_period: usize,
    /// Sinkhorn sweeps per candidate at refresh iterations; 0 disables the
    /// hybrid candidate.
    pub sinkhorn_candidates: usize,
    /// Fraction of the `n x (m-1)` block kept by the top-k rule.
    pub density: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_iter: usize,
    /// Stop once the marginal error drops to `tol`; zero runs all
    /// `max_iter` iterations.
    pub tol: f64,
    pub max_ls_trials: usize,
    /// Factorization retries with doubled `tau` after a tiny pivot.
    pub max_tau_retries: usize,
    pub record_every: usize,
    pub execution: Execution,
}

impl Default for SplrConfig {
    fn default() -> Self {
        Self {
            tau_max: 1.0,
            refresh_period: 10,
            sinkhorn_candidates: 5,
            density: 0.01,
            c1: 1e-4,
            c2: 0.9,
            max_iter: 1000,
            tol: 1e-8,
            max_ls_trials: 30,
            max_tau_retries: 8,
            record_every: 1,
            execution: Execution::Serial,
        }
    }
}

impl SplrConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.c1 > 0.0 && self.c1 < 0.5) {
            return bad("c1 must lie in (0, 1/2)");
        }
        if !(self.c2 > self.c1 && self.c2 < 1.0) {
            return bad("c2 must lie in (c1, 1)");
        }
        if self.refresh_period == 0 {
            return bad("refresh period S must be at least 1");
        }
        if !(self.tau_max > 0.0 && self.tau_max.is_finite()) {
            return bad("tau_max must be positive");
        }
        if !(0.0..=1.0).contains(&self.density) {
            return bad("density must lie in [0, 1]");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if self.max_ls_trials == 0 {
            return bad("max_ls_trials must be at least 1");
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be non-negative");
        }
        Ok(())
    }

    /// Hash of everything that can change the iterates (scheduling mode
    /// and recording stride are excluded).
    pub fn hash(&self) -> u64 {
        config_hash(&format!(
            "splr tau_max={:e} S={} J={} density={:e} c1={:e} c2={:e} max_iter={} tol={:e} ls={} retries={}",
            self.tau_max,
            self.refresh_period,
            self.sinkhorn_candidates,
            self.density,
            self.c1,
            self.c2,
            self.max_iter,
            self.tol,
            self.max_ls_trials,
            self.max_tau_retries
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SplrConfig::default().validate().unwrap();
    }

    #[test]
    fn wolfe_constants_are_checked() {
        for (c1, c2) in [(0.0, 0.9), (0.5, 0.9), (0.3, 0.2), (1e-4, 1.0)] {
            let cfg = SplrConfig {
                c1,
                c2,
                ..Default::default()
            };
            assert!(cfg.validate().is_err(), "c1={c1} c2={c2}");
        }
        let cfg = SplrConfig {
            refresh_period: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_ignores_scheduling() {
        let a = SplrConfig::default();
        let b = SplrConfig {
            execution: Execution::Overlapped,
            record_every: 7,
            ..Default::default()
        };
        assert_eq!(a.hash(), b.hash());
        let c = SplrConfig {
            refresh_period: 3,
            ..Default::default()
        };
        assert_ne!(a.hash(), c.hash());
    }
}
