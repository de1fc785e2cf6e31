//! Solvers for entropic-regularized optimal transport.
//!
//! The crate solves the gauge-fixed dual of
//! `min <P, M> - eta * h(P)` over couplings of `a` and `b` with two
//! methods:
//!
//! * [`sinkhorn`]: log-domain Sinkhorn, exact alternating block
//!   maximization of the dual;
//! * [`splr`]: a sparse-plus-low-rank quasi-Newton method whose Hessian
//!   model `H_Omega + R + tau I` is solved through a sparse Cholesky
//!   factorization ([`sparse_chol`]) with the symbolic analysis reused
//!   across iterations, plus Sinkhorn candidates generated while the
//!   analysis runs.
//!
//! [`bench`] drives timed runs and writes CSV traces and SVG plots; the
//! `regot` binary exposes all of it on the command line.
//!
//! ```
//! use regot::{dual::DualPoint, problem::gen_synthetic2, splr::{run_splr, SplrConfig}};
//!
//! let p = gen_synthetic2(32, 32, 0.05)?;
//! let cfg = SplrConfig { tol: 1e-8, ..SplrConfig::default() };
//! let (x, trace) = run_splr(&DualPoint::zeros(32, 32), &p, &cfg)?;
//! assert!(trace.last().unwrap().marginal_error <= 1e-8);
//! # let _ = x;
//! # Ok::<(), regot::Error>(())
//! ```

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod dual;
pub mod error;
pub mod matrix;
pub mod problem;
pub mod sinkhorn;
pub mod sparse_chol;
pub mod sparsify;
pub mod splr;
pub mod trace;

pub use error::{Error, Result};
pub use matrix::Matrix;

// The guide's chapters are compiled as doctests so its snippets stay
// in sync with the library. One module per chapter keeps failures
// traceable to their source file.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/problem.md")]
    mod problem {}
    #[doc = include_str!("../../../book/src/dual.md")]
    mod dual {}
    #[doc = include_str!("../../../book/src/sinkhorn.md")]
    mod sinkhorn {}
    #[doc = include_str!("../../../book/src/sparsify.md")]
    mod sparsify {}
    #[doc = include_str!("../../../book/src/cholesky.md")]
    mod cholesky {}
    #[doc = include_str!("../../../book/src/splr.md")]
    mod splr {}
    #[doc = include_str!("../../../book/src/bench.md")]
    mod bench {}
}
