//! Simplicial sparse Cholesky split into its three phases: symbolic
//! analysis (ordering, elimination tree, pattern of `L`), numeric
//! factorization and triangular solves.
//!
//! The symbolic factor depends only on the sparsity pattern. It is
//! immutable and can be shared behind an [`Arc`](std::sync::Arc) while new
//! numeric factors are computed against it.

mod numeric;
mod ordering;
mod symbolic;

pub use numeric::{numeric_factorize, NumericFactor, PIVOT_TOL};
pub use ordering::{invert, is_permutation, minimum_degree};
pub use symbolic::{symbolic_analyze, symbolic_analyze_with, OrderingMethod, SymbolicFactor};

/// Solves `A x = rhs` with a numeric factor of `A`.
pub fn solve(factor: &NumericFactor, rhs: &[f64]) -> Vec<f64> {
    factor.solve(rhs)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::error::Error;
    use crate::matrix::Matrix;
    use crate::sparsify::SparseSym;

    fn sparse(rows: &[&[f64]]) -> SparseSym {
        SparseSym::from_dense(&Matrix::from_rows(rows)).unwrap()
    }

    fn factor(a: &SparseSym) -> NumericFactor {
        numeric_factorize(&Arc::new(symbolic_analyze(a).unwrap()), a).unwrap()
    }

    #[test]
    fn identity() {
        let a = SparseSym::from_dense(&Matrix::identity(4)).unwrap();
        let sym = symbolic_analyze(&a).unwrap();
        assert_eq!(sym.nnz_l(), 4);
        let f = numeric_factorize(&Arc::new(sym), &a).unwrap();
        assert_eq!(f.l_dense(), Matrix::identity(4));
        assert_eq!(f.solve(&[1.0, -2.0, 3.0, 0.5]), vec![1.0, -2.0, 3.0, 0.5]);
    }

    #[test]
    fn two_by_two_hand_cholesky() {
        let a = sparse(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let sym = symbolic_analyze_with(&a, OrderingMethod::Natural).unwrap();
        let f = numeric_factorize(&Arc::new(sym), &a).unwrap();
        let l = f.l_dense();
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(1, 0)], 1.0);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tridiagonal_has_no_fill() {
        let dim = 7;
        let a = SparseSym::from_dense(&Matrix::from_fn(dim, dim, |i, j| {
            if i == j {
                4.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        }))
        .unwrap();
        let sym = symbolic_analyze_with(&a, OrderingMethod::Natural).unwrap();
        assert_eq!(sym.nnz_l(), 2 * dim - 1);
        let etree: Vec<_> = sym.etree().to_vec();
        let expected: Vec<_> = (0..dim).map(|j| (j + 1 < dim).then_some(j + 1)).collect();
        assert_eq!(etree, expected);
        assert_eq!(symbolic_analyze(&a).unwrap().nnz_l(), 2 * dim - 1);
    }

    #[test]
    fn arrow_ordering_matters() {
        let dim = 10;
        let a = SparseSym::from_dense(&Matrix::from_fn(dim, dim, |i, j| {
            if i == j {
                dim as f64
            } else if i == 0 || j == 0 {
                1.0
            } else {
                0.0
            }
        }))
        .unwrap();
        let natural = symbolic_analyze_with(&a, OrderingMethod::Natural).unwrap();
        assert_eq!(natural.nnz_l(), dim * (dim + 1) / 2);
        let md = symbolic_analyze(&a).unwrap();
        assert_eq!(md.nnz_l(), 2 * dim - 1);
    }

    #[test]
    fn diagonal_pattern() {
        let a = sparse(&[&[2.0, 0.0, 0.0], &[0.0, 3.0, 0.0], &[0.0, 0.0, 5.0]]);
        let f = factor(&a);
        assert_eq!(f.symbolic().nnz_l(), 3);
        let x = f.solve(&[2.0, 3.0, 5.0]);
        assert!(x.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn not_positive_definite() {
        let a = sparse(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let sym = Arc::new(symbolic_analyze(&a).unwrap());
        assert!(matches!(
            numeric_factorize(&sym, &a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn pattern_mismatch_is_rejected() {
        let diag = SparseSym::from_dense(&Matrix::identity(3)).unwrap();
        let sym = Arc::new(symbolic_analyze(&diag).unwrap());
        let full = sparse(&[&[4.0, 1.0, 0.0], &[1.0, 4.0, 1.0], &[0.0, 1.0, 4.0]]);
        assert!(matches!(
            numeric_factorize(&sym, &full),
            Err(Error::PatternMismatch)
        ));
        // the other direction is fine: a sub-pattern is covered
        let sym = Arc::new(symbolic_analyze(&full).unwrap());
        let f = numeric_factorize(&sym, &diag).unwrap();
        assert_eq!(f.solve(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn refactorize_reuses_structure() {
        let a = sparse(&[&[4.0, 1.0, 0.0], &[1.0, 4.0, 1.0], &[0.0, 1.0, 4.0]]);
        let b = sparse(&[&[5.0, 2.0, 0.0], &[2.0, 6.0, 1.0], &[0.0, 1.0, 7.0]]);
        let sym = Arc::new(symbolic_analyze(&a).unwrap());
        let mut f = numeric_factorize(&sym, &a).unwrap();
        f.refactorize(&b).unwrap();
        let fresh = factor(&b);
        assert_eq!(f.l_values(), fresh.l_values());
    }

    #[test]
    fn rejects_bad_structure() {
        let bad = SparseSym::from_dense(&Matrix::identity(3)).unwrap();
        assert!(symbolic_analyze_with(&bad, OrderingMethod::Given(vec![0, 0, 1])).is_err());
    }
}
