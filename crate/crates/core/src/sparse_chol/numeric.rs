use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sparsify::SparseSym;

use super::symbolic::SymbolicFactor;

/// Pivots at or below this multiple of the largest diagonal of `A` are
/// reported as a loss of positive definiteness.
pub const PIVOT_TOL: f64 = 1e-13;

/// Numeric values of `L` with `P^T A P = L L^T`.
#[derive(Clone, Debug)]
pub struct NumericFactor {
    symbolic: Arc<SymbolicFactor>,
    values: Vec<f64>,
    work: Vec<f64>,
}

impl NumericFactor {
    pub fn symbolic(&self) -> &Arc<SymbolicFactor> {
        &self.symbolic
    }

    /// Values aligned with the symbolic `L` pattern.
    pub fn l_values(&self) -> &[f64] {
        &self.values
    }

    /// Recomputes `L` for new values of `A` in place, keeping the symbolic
    /// structure.
    pub fn refactorize(&mut self, a: &SparseSym) -> Result<()> {
        factorize_into(&self.symbolic, a, &mut self.values, &mut self.work)
    }

    /// Solves `A x = rhs` as `x = P L^-T L^-1 P^T rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let s = &*self.symbolic;
        assert_eq!(rhs.len(), s.dim(), "right-hand side length mismatch");
        let (ptr, rows, vals) = (s.l_col_ptr(), s.l_row_idx(), &self.values);
        let mut y: Vec<f64> = s.perm().iter().map(|&old| rhs[old]).collect();
        for j in 0..s.dim() {
            let p0 = ptr[j];
            let yj = y[j] / vals[p0];
            y[j] = yj;
            for p in p0 + 1..ptr[j + 1] {
                y[rows[p]] -= vals[p] * yj;
            }
        }
        for j in (0..s.dim()).rev() {
            let p0 = ptr[j];
            let mut acc = y[j];
            for p in p0 + 1..ptr[j + 1] {
                acc -= vals[p] * y[rows[p]];
            }
            y[j] = acc / vals[p0];
        }
        let mut out = vec![0.0; s.dim()];
        for (new, &old) in s.perm().iter().enumerate() {
            out[old] = y[new];
        }
        out
    }

    /// Dense copy of `L` (test helper).
    pub fn l_dense(&self) -> Matrix {
        let s = &*self.symbolic;
        let mut l = Matrix::zeros(s.dim(), s.dim());
        for j in 0..s.dim() {
            for p in s.l_col_ptr()[j]..s.l_col_ptr()[j + 1] {
                l[(s.l_row_idx()[p], j)] = self.values[p];
            }
        }
        l
    }
}

/// Up-looking simplicial Cholesky of `P^T A P` over a precomputed pattern.
pub fn numeric_factorize(symbolic: &Arc<SymbolicFactor>, a: &SparseSym) -> Result<NumericFactor> {
    let mut values = vec![0.0; symbolic.nnz_l()];
    let mut work = vec![0.0; symbolic.dim()];
    factorize_into(symbolic, a, &mut values, &mut work)?;
    Ok(NumericFactor {
        symbolic: Arc::clone(symbolic),
        values,
        work,
    })
}

fn factorize_into(
    s: &SymbolicFactor,
    a: &SparseSym,
    values: &mut [f64],
    x: &mut [f64],
) -> Result<()> {
    if !s.covers(a) {
        return Err(Error::PatternMismatch);
    }
    let max_diag = a.diagonal().into_iter().fold(0.0, f64::max);
    let tol = PIVOT_TOL * max_diag;
    let (ptr, rows) = (s.l_col_ptr(), s.l_row_idx());
    x.fill(0.0);
    for k in 0..s.dim() {
        let old = s.perm()[k];
        for (&r, &v) in a.col_rows(old).iter().zip(a.col_values(old)) {
            let i = s.iperm()[r];
            if i <= k {
                x[i] += v;
            }
        }
        let mut d = x[k];
        x[k] = 0.0;
        for (j, slot) in s.row_entries(k) {
            let ljj = values[ptr[j]];
            let lkj = x[j] / ljj;
            x[j] = 0.0;
            for p in ptr[j] + 1..ptr[j + 1] {
                let i = rows[p];
                if i >= k {
                    break;
                }
                x[i] -= values[p] * lkj;
            }
            values[slot] = lkj;
            d -= lkj * lkj;
        }
        if !(d > tol) {
            x.fill(0.0);
            return Err(Error::NotPositiveDefinite {
                column: k,
                pivot: d,
            });
        }
        values[ptr[k]] = d.sqrt();
    }
    Ok(())
}
