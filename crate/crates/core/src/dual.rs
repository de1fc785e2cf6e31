//! The gauge-fixed dual objective and its derivatives.
//!
//! With `beta[m-1]` pinned to zero the dual is a smooth strictly convex
//! function `f` of the free vector `x = (alpha, beta[..m-1])`:
//!
//! ```text
//! T_ij = exp((alpha_i + beta_j - M_ij) / eta)
//! f(x) = eta * sum_ij T_ij - alpha^T a - beta^T b
//! grad = [T 1 - a ; (T^T 1 - b)[..m-1]]
//! ```
//!
//! Every exponent is clamped to `[-EXP_CLAMP, EXP_CLAMP]` before `exp`, in
//! the plan, the objective and both gradient paths alike.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::ProblemInstance;

/// Exponent clamp applied before every `exp`.
pub const EXP_CLAMP: f64 = 700.0;

/// Largest `n + m` for which [`hessian_dense`] will materialize the Hessian.
pub const DENSE_ORACLE_CAP: usize = 4096;

#[inline]
pub(crate) fn kernel(alpha: f64, beta: f64, cost: f64, inv_eta: f64) -> f64 {
    ((alpha + beta - cost) * inv_eta)
        .clamp(-EXP_CLAMP, EXP_CLAMP)
        .exp()
}

/// Dual potentials with the last column potential fixed at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPoint {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl DualPoint {
    pub fn zeros(n: usize, m: usize) -> Self {
        assert!(n >= 1 && m >= 1);
        Self {
            alpha: vec![0.0; n],
            beta: vec![0.0; m],
        }
    }

    /// Builds a point from full potentials, shifting the gauge so that
    /// `beta[m-1] = 0`. The shift leaves the transport plan unchanged.
    pub fn from_potentials(mut alpha: Vec<f64>, mut beta: Vec<f64>) -> Self {
        assert!(!alpha.is_empty() && !beta.is_empty());
        let shift = *beta.last().unwrap();
        if shift != 0.0 {
            alpha.iter_mut().for_each(|v| *v += shift);
            beta.iter_mut().for_each(|v| *v -= shift);
        }
        *beta.last_mut().unwrap() = 0.0;
        Self { alpha, beta }
    }

    /// Splits a free vector of length `n + m - 1` into `(alpha, beta)`.
    pub fn from_free(x: &[f64], n: usize) -> Self {
        assert!(n >= 1 && x.len() >= n);
        let mut beta = x[n..].to_vec();
        beta.push(0.0);
        Self {
            alpha: x[..n].to_vec(),
            beta,
        }
    }

    /// The free vector `(alpha, beta[..m-1])`.
    pub fn to_free(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        x.extend_from_slice(&self.alpha);
        x.extend_from_slice(&self.beta[..self.beta.len() - 1]);
        x
    }

    #[inline]
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Full column potentials; the last entry is always zero.
    #[inline]
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.beta.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.alpha.len() + self.beta.len() - 1
    }

    /// `max(|alpha|_inf, |beta|_inf)`.
    pub fn sup_norm(&self) -> f64 {
        self.alpha
            .iter()
            .chain(&self.beta)
            .fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    fn check(&self, p: &ProblemInstance) {
        assert_eq!(self.n(), p.n(), "dual point and problem disagree on n");
        assert_eq!(self.m(), p.m(), "dual point and problem disagree on m");
    }
}

/// Objective, gradient and the plan marginals from one pass over the cost.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientResult {
    pub f: f64,
    /// `[row_sums - a ; col_sums[..m-1] - b[..m-1]]`.
    pub grad: Vec<f64>,
    /// `T 1_m`.
    pub row_sums: Vec<f64>,
    /// `T^T 1_n`.
    pub col_sums: Vec<f64>,
}

impl GradientResult {
    fn assemble(f: f64, row_sums: Vec<f64>, col_sums: Vec<f64>, p: &ProblemInstance) -> Self {
        let m = p.m();
        let grad = row_sums
            .iter()
            .zip(p.a())
            .map(|(r, a)| r - a)
            .chain(
                col_sums[..m - 1]
                    .iter()
                    .zip(&p.b()[..m - 1])
                    .map(|(c, b)| c - b),
            )
            .collect();
        Self {
            f,
            grad,
            row_sums,
            col_sums,
        }
    }

    /// `|T 1 - a|_1 + |T^T 1 - b|_1`, from the stored marginals.
    pub fn marginal_error(&self, p: &ProblemInstance) -> f64 {
        l1_residual(&self.row_sums, p.a()) + l1_residual(&self.col_sums, p.b())
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

fn l1_residual(v: &[f64], target: &[f64]) -> f64 {
    v.iter().zip(target).map(|(x, t)| (x - t).abs()).sum()
}

/// Transport plan `T(x)`.
pub fn plan(x: &DualPoint, p: &ProblemInstance) -> Matrix {
    x.check(p);
    let inv_eta = 1.0 / p.eta();
    let cost = p.cost();
    Matrix::from_fn(p.n(), p.m(), |i, j| {
        kernel(x.alpha[i], x.beta[j], cost[(i, j)], inv_eta)
    })
}

/// `f(x) = eta * sum(T) - alpha^T a - beta^T b`.
pub fn objective(x: &DualPoint, p: &ProblemInstance) -> f64 {
    x.check(p);
    let inv_eta = 1.0 / p.eta();
    let mut mass = 0.0;
    for i in 0..p.n() {
        let row = p.cost().row(i);
        let ai = x.alpha[i];
        mass += row
            .iter()
            .zip(&x.beta)
            .map(|(&c, &bj)| kernel(ai, bj, c, inv_eta))
            .sum::<f64>();
    }
    p.eta() * mass - dot(&x.alpha, p.a()) - dot(&x.beta, p.b())
}

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Tile shape for the single-pass gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileShape {
    pub rows: usize,
    pub cols: usize,
}

impl Default for TileShape {
    fn default() -> Self {
        Self { rows: 8, cols: 32 }
    }
}

/// Sums `v` by recursive halving. Used to merge per-tile partials in a
/// fixed order.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        len => {
            let (lo, hi) = v.split_at(len / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// Objective, gradient and plan marginals in one sweep over the cost
/// matrix, using the default 8x32 tiling.
pub fn fused_gradient(x: &DualPoint, p: &ProblemInstance) -> GradientResult {
    fused_gradient_tiled(x, p, TileShape::default())
}

/// Single-pass gradient with an explicit tile shape.
///
/// Each cost entry is read once. Within a tile, `T_ij` feeds a running row
/// partial (one per tile row) and a column accumulator (one per tile
/// column). Per-tile partials are stored and merged pairwise across tiles,
/// so the result is deterministic for a given tile shape.
pub fn fused_gradient_tiled(x: &DualPoint, p: &ProblemInstance, tile: TileShape) -> GradientResult {
    x.check(p);
    let inv_eta = 1.0 / p.eta();
    let (alpha, beta) = (&x.alpha, &x.beta);
    let sweep = tiled_sweep(p, tile, |i, j, c| {
        (kernel(alpha[i], beta[j], c, inv_eta), 0.0)
    });
    let f = p.eta() * sweep.mass - dot(alpha, p.a()) - dot(beta, p.b());
    GradientResult::assemble(f, sweep.row_sums, sweep.col_sums, p)
}

struct Sweep {
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
    mass: f64,
    extra: f64,
}

/// One tiled pass over the cost matrix. `entry(i, j, M_ij)` returns the plan
/// entry and a side quantity; plan entries are reduced into row sums,
/// column sums and total mass, the side quantity into a total.
fn tiled_sweep<F>(p: &ProblemInstance, tile: TileShape, entry: F) -> Sweep
where
    F: Fn(usize, usize, f64) -> (f64, f64),
{
    assert!(
        tile.rows >= 1 && tile.cols >= 1,
        "tile dimensions must be positive"
    );
    let (n, m) = (p.n(), p.m());
    let cost = p.cost();
    let row_tiles = n.div_ceil(tile.rows);
    let col_tiles = m.div_ceil(tile.cols);

    // row_part[i * col_tiles + tc], col_part[tr * m + j], tile_*[tr * col_tiles + tc]
    let mut row_part = vec![0.0; n * col_tiles];
    let mut col_part = vec![0.0; row_tiles * m];
    let mut tile_mass = vec![0.0; row_tiles * col_tiles];
    let mut tile_extra = vec![0.0; row_tiles * col_tiles];
    let mut col_acc = vec![0.0; tile.cols];

    for tr in 0..row_tiles {
        let r0 = tr * tile.rows;
        let r1 = (r0 + tile.rows).min(n);
        for tc in 0..col_tiles {
            let c0 = tc * tile.cols;
            let c1 = (c0 + tile.cols).min(m);
            let acc = &mut col_acc[..c1 - c0];
            acc.fill(0.0);
            let mut mass = 0.0;
            let mut extra = 0.0;
            for i in r0..r1 {
                let crow = &cost.row(i)[c0..c1];
                let mut row_sum = 0.0;
                for ((slot, &c), j) in acc.iter_mut().zip(crow).zip(c0..c1) {
                    let (t, e) = entry(i, j, c);
                    row_sum += t;
                    extra += e;
                    *slot += t;
                }
                row_part[i * col_tiles + tc] = row_sum;
                mass += row_sum;
            }
            col_part[tr * m + c0..tr * m + c1].copy_from_slice(acc);
            tile_mass[tr * col_tiles + tc] = mass;
            tile_extra[tr * col_tiles + tc] = extra;
        }
    }

    let row_sums: Vec<f64> = (0..n)
        .map(|i| pairwise_sum(&row_part[i * col_tiles..(i + 1) * col_tiles]))
        .collect();
    let mut column = vec![0.0; row_tiles];
    let col_sums: Vec<f64> = (0..m)
        .map(|j| {
            for (tr, slot) in column.iter_mut().enumerate() {
                *slot = col_part[tr * m + j];
            }
            pairwise_sum(&column)
        })
        .collect();
    Sweep {
        row_sums,
        col_sums,
        mass: pairwise_sum(&tile_mass),
        extra: pairwise_sum(&tile_extra),
    }
}

/// `exp(t) - 1 - t` without cancellation for small `t`.
pub(crate) fn exp_remainder(t: f64) -> f64 {
    if t.abs() < 1.0 {
        // Taylor series from the quadratic term; converges fast for |t| < 1
        // and avoids the cancellation in `expm1(t) - t`.
        let mut term = 0.5 * t * t;
        let mut sum = term;
        let mut k = 3.0;
        while term.abs() > 1e-17 * sum.abs() {
            term *= t / k;
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        t.exp_m1() - t
    }
}

/// Result of evaluating a trial point `x + gamma d`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepEvaluation {
    pub point: DualPoint,
    /// Objective, gradient and marginals at the trial point.
    pub eval: GradientResult,
    /// `f(x + gamma d) - f(x)`, computed directly rather than by
    /// subtracting two objective values.
    pub decrease: f64,
}

/// Evaluates `x + gamma d` in one tiled pass, including the objective
/// change `f(x + gamma d) - f(x)`.
///
/// The change is accumulated as
/// `gamma g^T d + eta * sum_ij T_ij (exp(delta_ij) - 1 - delta_ij)` with
/// `delta_ij = gamma (d_alpha_i + d_beta_j) / eta` and `g` the gradient at
/// `x`, so it stays accurate when it is far below the rounding level of
/// `f` itself. Entries where the exponent clamp is active fall back to the
/// plain difference of plan entries.
pub fn evaluate_step(
    x: &DualPoint,
    d: &[f64],
    gamma: f64,
    p: &ProblemInstance,
    g: &[f64],
) -> StepEvaluation {
    x.check(p);
    let n = p.n();
    assert_eq!(d.len(), x.dim(), "direction length mismatch");
    let inv_eta = 1.0 / p.eta();
    let step_alpha: Vec<f64> = d[..n].iter().map(|v| gamma * v).collect();
    let mut step_beta: Vec<f64> = d[n..].iter().map(|v| gamma * v).collect();
    step_beta.push(0.0);
    let alpha_plus: Vec<f64> = x
        .alpha
        .iter()
        .zip(&step_alpha)
        .map(|(a, s)| a + s)
        .collect();
    let beta_plus: Vec<f64> = x.beta.iter().zip(&step_beta).map(|(b, s)| b + s).collect();
    let (alpha, beta) = (&x.alpha, &x.beta);

    let sweep = tiled_sweep(p, TileShape::default(), |i, j, c| {
        let raw = (alpha[i] + beta[j] - c) * inv_eta;
        let raw_plus = (alpha_plus[i] + beta_plus[j] - c) * inv_eta;
        let e = raw.clamp(-EXP_CLAMP, EXP_CLAMP);
        let e_plus = raw_plus.clamp(-EXP_CLAMP, EXP_CLAMP);
        let t = e.exp();
        let t_plus = e_plus.exp();
        let delta = (step_alpha[i] + step_beta[j]) * inv_eta;
        let curvature = if e == raw && e_plus == raw_plus {
            t * exp_remainder(delta)
        } else {
            (t_plus - t) - t * delta
        };
        (t_plus, curvature)
    });

    let linear: f64 = g.iter().zip(d).map(|(gi, di)| gi * di).sum::<f64>() * gamma;
    let decrease = linear + p.eta() * sweep.extra;
    let f = p.eta() * sweep.mass - dot(&alpha_plus, p.a()) - dot(&beta_plus, p.b());
    let point = DualPoint {
        alpha: alpha_plus,
        beta: beta_plus,
    };
    StepEvaluation {
        point,
        eval: GradientResult::assemble(f, sweep.row_sums, sweep.col_sums, p),
        decrease,
    }
}

/// Reference gradient: materialize `T`, then reduce rows and columns in
/// separate passes.
pub fn naive_gradient(x: &DualPoint, p: &ProblemInstance) -> GradientResult {
    let t = plan(x, p);
    let row_sums = t.row_sums();
    let col_sums = t.col_sums();
    let mass: f64 = t.as_slice().iter().sum();
    let f = p.eta() * mass - dot(&x.alpha, p.a()) - dot(&x.beta, p.b());
    GradientResult::assemble(f, row_sums, col_sums, p)
}

/// The exact Hessian as a dense `(n+m-1)^2` matrix. Intended as a test
/// oracle; refuses problems with `n + m > DENSE_ORACLE_CAP`.
pub fn hessian_dense(x: &DualPoint, p: &ProblemInstance) -> Result<Matrix> {
    let (n, m) = (p.n(), p.m());
    if n + m > DENSE_ORACLE_CAP {
        return Err(Error::OracleSize {
            dim: n + m,
            cap: DENSE_ORACLE_CAP,
        });
    }
    let t = plan(x, p);
    let inv_eta = 1.0 / p.eta();
    let dim = n + m - 1;
    let mut h = Matrix::zeros(dim, dim);
    let row_sums = t.row_sums();
    let col_sums = t.col_sums();
    for i in 0..n {
        h[(i, i)] = row_sums[i] * inv_eta;
        for j in 0..m - 1 {
            let v = t[(i, j)] * inv_eta;
            h[(i, n + j)] = v;
            h[(n + j, i)] = v;
        }
    }
    for j in 0..m - 1 {
        h[(n + j, n + j)] = col_sums[j] * inv_eta;
    }
    Ok(h)
}

/// `|T 1 - a|_1 + |T^T 1 - b|_1`.
pub fn marginal_error(t: &Matrix, a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(t.rows(), a.len());
    assert_eq!(t.cols(), b.len());
    l1_residual(&t.row_sums(), a) + l1_residual(&t.col_sums(), b)
}

/// Closed-form duality gap `alpha^T (T 1 - a) + beta^T (T^T 1 - b)`.
pub fn duality_gap(x: &DualPoint, p: &ProblemInstance) -> f64 {
    let g = fused_gradient(x, p);
    duality_gap_from(x, p, &g)
}

/// Duality gap reusing marginals that were already computed at `x`.
pub fn duality_gap_from(x: &DualPoint, p: &ProblemInstance, g: &GradientResult) -> f64 {
    let row: f64 = x
        .alpha
        .iter()
        .zip(g.row_sums.iter().zip(p.a()))
        .map(|(al, (r, a))| al * (r - a))
        .sum();
    let col: f64 = x
        .beta
        .iter()
        .zip(g.col_sums.iter().zip(p.b()))
        .map(|(be, (c, b))| be * (c - b))
        .sum();
    row + col
}

/// Primal value `L_p` of the plan `T(x)` and dual value `L_d` at `x`,
/// each evaluated from its own definition.
///
/// `L_p = <T, M> + eta * sum T log T - eta * sum T`,
/// `L_d = -eta * sum T + alpha^T a + beta^T b`.
pub fn primal_dual_values(x: &DualPoint, p: &ProblemInstance) -> (f64, f64) {
    let t = plan(x, p);
    let eta = p.eta();
    let mut transport = 0.0;
    let mut entropy = 0.0;
    let mut mass = 0.0;
    for (&tij, &mij) in t.as_slice().iter().zip(p.cost().as_slice()) {
        transport += tij * mij;
        if tij > 0.0 {
            entropy += tij * tij.ln();
        }
        mass += tij;
    }
    let primal = transport + eta * entropy - eta * mass;
    let dual = -eta * mass + dot(&x.alpha, p.a()) + dot(&x.beta, p.b());
    (primal, dual)
}
