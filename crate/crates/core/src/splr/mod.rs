//! Sparse-plus-low-rank quasi-Newton method on the gauge-fixed dual.
//!
//! Each iteration builds the model
//!
//! ```text
//! B = H_Omega + xi u u^T + zeta v v^T + tau I
//! ```
//!
//! where `H_Omega` keeps the exact diagonal of the Hessian and only the
//! top-k plan entries off the diagonal, the rank-two term follows the BFGS
//! update from the previous step, and `tau = min(tau_max, |g|)`. The
//! direction `d = -B^-1 g` costs one sparse Cholesky factorization of
//! `H_Omega + tau I` and three triangular solve pairs. A Wolfe line
//! search picks the step length.
//!
//! The pattern `Omega` and its symbolic factor are recomputed only every
//! `S` iterations. While the symbolic analysis runs, a few Sinkhorn sweeps
//! from the same iterate produce a second candidate, and the candidate
//! with the lower objective wins.

mod config;
mod direction;
mod line_search;
mod low_rank;
mod step;

pub use config::{Execution, SplrConfig};
pub use direction::{compute_direction, DirectionKind};
pub use line_search::{line_search, LineSearchResult, Trial, WolfeCertificate};
pub use low_rank::{build_low_rank, LowRankTerm, CURVATURE_GUARD};
pub use step::{
    run_splr, run_splr_detailed, splr_step, Candidate, SplrFailure, SplrRun, SplrState, StepRecord,
};
