//! Property tests for the sparse Cholesky pipeline against dense oracles.

mod common;

use proptest::prelude::*;
use rand::Rng;
use std::sync::Arc;

use common::*;
use regot::sparse_chol::{
    numeric_factorize, solve, symbolic_analyze, symbolic_analyze_with, OrderingMethod,
};
use regot::sparsify::SparseSym;
use regot::Matrix;

/// Random symmetric diagonally dominant matrix with the given off-diagonal
/// fill probability.
fn random_spd(seed: u64, dim: usize, fill: f64) -> Matrix {
    let mut r = rng(seed);
    let mut a = Matrix::zeros(dim, dim);
    for j in 0..dim {
        for i in j + 1..dim {
            if r.gen_bool(fill) {
                let v = r.gen_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    for i in 0..dim {
        let off: f64 = (0..dim).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
        a[(i, i)] = off + r.gen_range(0.1..2.0);
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn factor_reconstructs_and_solves(seed in any::<u64>(), dim in 1usize..48, fill in 0.0f64..0.5) {
        let dense = random_spd(seed, dim, fill);
        let a = SparseSym::from_dense(&dense).unwrap();
        let sym = Arc::new(symbolic_analyze(&a).unwrap());
        let f = numeric_factorize(&sym, &a).unwrap();
        let perm = sym.perm();
        let pap = Matrix::from_fn(dim, dim, |i, j| dense[(perm[i], perm[j])]);
        let l = to_na(&f.l_dense());
        let llt = &l * l.transpose();
        prop_assert!((to_na(&pap) - llt).amax() <= 1e-10 * dense.max_abs());

        let b: Vec<f64> = (0..dim).map(|k| (k as f64 * 0.37).sin() + 0.5).collect();
        let x = solve(&f, &b);
        let ax = dense.mul_vec(&x);
        prop_assert!(max_abs_diff(&ax, &b) <= 1e-9 * max_abs(&b));
        let oracle = dense_solve(&to_na(&dense), &b);
        prop_assert!(max_abs_diff(&x, &oracle) <= 1e-9 * max_abs(&oracle).max(1.0));
    }

    #[test]
    fn orderings_agree_on_the_solution(seed in any::<u64>(), dim in 2usize..32, fill in 0.0f64..0.4) {
        let dense = random_spd(seed, dim, fill);
        let a = SparseSym::from_dense(&dense).unwrap();
        let b: Vec<f64> = (0..dim).map(|k| 1.0 + k as f64).collect();
        let md = Arc::new(symbolic_analyze(&a).unwrap());
        let nat = Arc::new(symbolic_analyze_with(&a, OrderingMethod::Natural).unwrap());
        let x1 = solve(&numeric_factorize(&md, &a).unwrap(), &b);
        let x2 = solve(&numeric_factorize(&nat, &a).unwrap(), &b);
        prop_assert!(max_abs_diff(&x1, &x2) <= 1e-10 * max_abs(&x1).max(1.0));
    }

    #[test]
    fn reuse_matches_fresh_analysis(seed in any::<u64>(), dim in 1usize..40, fill in 0.0f64..0.5) {
        let first = random_spd(seed, dim, fill);
        let a = SparseSym::from_dense(&first).unwrap();
        let sym = Arc::new(symbolic_analyze(&a).unwrap());
        let mut reused = numeric_factorize(&sym, &a).unwrap();

        // same pattern, new values
        let mut r = rng(seed ^ 0x5eed);
        let mut second = first.clone();
        for j in 0..dim {
            for i in j + 1..dim {
                if first[(i, j)] != 0.0 {
                    let v = r.gen_range(-1.0..1.0);
                    second[(i, j)] = v;
                    second[(j, i)] = v;
                }
            }
        }
        for i in 0..dim {
            let off: f64 = (0..dim).filter(|&j| j != i).map(|j| second[(i, j)].abs()).sum();
            second[(i, i)] = off + 1.0;
        }
        let a2 = SparseSym::from_dense(&second).unwrap();
        prop_assume!(a2.pattern_id() == a.pattern_id());
        reused.refactorize(&a2).unwrap();
        let fresh = numeric_factorize(&Arc::new(symbolic_analyze(&a2).unwrap()), &a2).unwrap();
        for (u, v) in reused.l_values().iter().zip(fresh.l_values()) {
            let ulp = (u.to_bits() as i64 - v.to_bits() as i64).abs();
            prop_assert!(ulp <= 1, "{u} vs {v}");
        }
    }
}
