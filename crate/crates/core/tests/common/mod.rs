//! Independent oracles shared by the integration tests: random instances
//! and dense linear algebra through nalgebra.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regot::dual::{plan, DualPoint};
use regot::problem::ProblemInstance;
use regot::sinkhorn::sinkhorn_steps;
use regot::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn positive_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Random cost in `[0, 1]` with an exact maximum of one and random
/// positive marginals.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize, eta: f64) -> ProblemInstance {
    let mut cost = Matrix::from_fn(n, m, |_, _| rng.gen_range(0.0..1.0));
    let max = cost.max();
    cost.as_mut_slice().iter_mut().for_each(|v| *v /= max);
    let a = positive_simplex(rng, n);
    let b = positive_simplex(rng, m);
    ProblemInstance::new(cost, a, b, eta).expect("random instance is valid")
}

/// A few Sinkhorn sweeps from zero, then a perturbation of size
/// `noise * eta`: a point with a well-scaled plan that is not optimal.
pub fn random_point(rng: &mut ChaCha8Rng, p: &ProblemInstance, noise: f64) -> DualPoint {
    let x = sinkhorn_steps(&DualPoint::zeros(p.n(), p.m()), p, 3);
    let free: Vec<f64> = x
        .to_free()
        .iter()
        .map(|v| v + noise * p.eta() * rng.gen_range(-1.0..1.0))
        .collect();
    DualPoint::from_free(&free, p.n())
}

pub fn to_na(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

/// `(lambda_min, lambda_max)` of a symmetric matrix.
pub fn eig_range(a: &DMatrix<f64>) -> (f64, f64) {
    let e = SymmetricEigen::new(a.clone()).eigenvalues;
    (e.min(), e.max())
}

/// Solves `a x = b` with a dense LU factorization.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("dense oracle matrix is singular")
        .as_slice()
        .to_vec()
}

/// Dense `H_Omega + tau I`, built from the plan entry by entry.
pub fn dense_sparsified_hessian(
    x: &DualPoint,
    p: &ProblemInstance,
    keep: impl Fn(usize, usize) -> bool,
    tau: f64,
) -> DMatrix<f64> {
    let (n, m) = (p.n(), p.m());
    let t = plan(x, p);
    let inv_eta = 1.0 / p.eta();
    let dim = n + m - 1;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..n {
        h[(i, i)] = t.row(i).iter().sum::<f64>() * inv_eta + tau;
    }
    for j in 0..m - 1 {
        h[(n + j, n + j)] = (0..n).map(|i| t[(i, j)]).sum::<f64>() * inv_eta + tau;
        for i in 0..n {
            if keep(i, j) {
                h[(i, n + j)] = t[(i, j)] * inv_eta;
                h[(n + j, i)] = t[(i, j)] * inv_eta;
            }
        }
    }
    h
}

pub fn max_abs_diff(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len());
    u.iter().zip(v).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

pub fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, a| m.max(a.abs()))
}

pub fn norm2(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Objective computed directly from its definition, with no tiling.
pub fn objective_oracle(x: &DualPoint, p: &ProblemInstance) -> f64 {
    let t = plan(x, p);
    p.eta() * t.as_slice().iter().sum::<f64>() - dot(x.alpha(), p.a()) - dot(x.beta(), p.b())
}

/// Central finite differences of [`objective_oracle`] in the free vector.
pub fn fd_gradient(x: &DualPoint, p: &ProblemInstance, h: f64) -> Vec<f64> {
    let base = x.to_free();
    (0..base.len())
        .map(|k| {
            let mut up = base.clone();
            let mut dn = base.clone();
            up[k] += h;
            dn[k] -= h;
            let fu = objective_oracle(&DualPoint::from_free(&up, p.n()), p);
            let fd = objective_oracle(&DualPoint::from_free(&dn, p.n()), p);
            (fu - fd) / (2.0 * h)
        })
        .collect()
}
