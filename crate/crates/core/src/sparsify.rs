//! Top-k sparsification of the transport plan and assembly of the
//! sparsified Hessian `H_Omega + tau I`.
//!
//! Coordinates are 0-based: `(i, j)` with `i < n` and `j < m - 1`. The
//! mandatory set `Omega*` is then row 0 together with column 0.

use std::cmp::Ordering;

use crate::dual::{fused_gradient, kernel, DualPoint, GradientResult};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::ProblemInstance;

/// Sorted, duplicate-free set of retained off-diagonal coordinates of the
/// `n x (m-1)` block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    m: usize,
    coords: Vec<(usize, usize)>,
    k_requested: usize,
}

impl SparsityPattern {
    /// The mandatory set alone: first row and first column of the block.
    pub fn minimal(n: usize, m: usize) -> Self {
        Self::from_coords(n, m, Vec::new(), 0).expect("empty coordinate list is valid")
    }

    /// Unions `extra` with the mandatory set, then sorts and deduplicates.
    pub fn from_coords(
        n: usize,
        m: usize,
        extra: Vec<(usize, usize)>,
        k_requested: usize,
    ) -> Result<Self> {
        if n == 0 || m < 2 {
            return Err(Error::Structure(format!(
                "sparsity pattern needs n >= 1 and m >= 2, got {n}x{m}"
            )));
        }
        if let Some(&(i, j)) = extra.iter().find(|&&(i, j)| i >= n || j >= m - 1) {
            return Err(Error::Structure(format!(
                "coordinate ({i}, {j}) outside the {n}x{} block",
                m - 1
            )));
        }
        let mut coords = extra;
        coords.extend((0..m - 1).map(|j| (0, j)));
        coords.extend((1..n).map(|i| (i, 0)));
        coords.sort_unstable();
        coords.dedup();
        Ok(Self {
            n,
            m,
            coords,
            k_requested,
        })
    }

    pub fn coords(&self) -> &[(usize, usize)] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn k_requested(&self) -> usize {
        self.k_requested
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.coords.binary_search(&(i, j)).is_ok()
    }

    /// Whether every mandatory coordinate is present.
    pub fn contains_minimal(&self) -> bool {
        (0..self.m - 1).all(|j| self.contains(0, j)) && (1..self.n).all(|i| self.contains(i, 0))
    }
}

/// Top-k budget for a target density `rho` of the `n x (m-1)` block.
pub fn density_to_k(rho: f64, n: usize, m: usize) -> usize {
    let total = n * (m - 1);
    ((rho * total as f64).ceil().max(0.0) as usize).min(total)
}

/// Larger value first; equal values ordered by `(i, j)` ascending.
fn rank(a: &(f64, usize, usize), b: &(f64, usize, usize)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
}

/// Keeps the `k` largest entries of `T` without its last column, unioned
/// with the mandatory set.
pub fn select_topk(t: &Matrix, k: usize) -> SparsityPattern {
    let (n, m) = (t.rows(), t.cols());
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (m - 1));
    for i in 0..n {
        let row = t.row(i);
        cand.extend(row[..m - 1].iter().enumerate().map(|(j, &v)| (v, i, j)));
    }
    let keep = k.min(cand.len());
    if keep < cand.len() && keep > 0 {
        cand.select_nth_unstable_by(keep - 1, rank);
    }
    let extra = cand[..keep].iter().map(|&(_, i, j)| (i, j)).collect();
    SparsityPattern::from_coords(n, m, extra, k).expect("coordinates come from T")
}

/// Symmetric sparse matrix stored in compressed sparse column form with
/// both triangles present. Row indices within a column are ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym {
    dim: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    /// `(n, m)` when the matrix was assembled from a transport pattern.
    layout: Option<(usize, usize)>,
    pattern_id: u64,
}

fn hash_pattern(col_ptr: &[usize], row_idx: &[usize]) -> u64 {
    col_ptr
        .iter()
        .chain(row_idx)
        .fold(0xcbf2_9ce4_8422_2325u64, |h, &v| {
            (h ^ v as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
}

impl SparseSym {
    /// Builds from raw CSC arrays, checking structural symmetry, sorted
    /// rows, a full diagonal and finite values.
    pub fn from_csc(
        dim: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != dim + 1
            || col_ptr[0] != 0
            || *col_ptr.last().unwrap() != row_idx.len()
            || row_idx.len() != values.len()
            || col_ptr.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::Structure(
                "malformed compressed column arrays".into(),
            ));
        }
        let pattern_id = hash_pattern(&col_ptr, &row_idx);
        let a = Self {
            dim,
            col_ptr,
            row_idx,
            values,
            layout: None,
            pattern_id,
        };
        a.check_structure()?;
        if a.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Structure("non-finite value".into()));
        }
        Ok(a)
    }

    /// Keeps the structurally nonzero entries of a dense matrix plus the
    /// whole diagonal. The input must be exactly symmetric.
    pub fn from_dense(a: &Matrix) -> Result<Self> {
        let dim = a.rows();
        if a.cols() != dim {
            return Err(Error::Structure("matrix is not square".into()));
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..dim {
            for i in 0..dim {
                let v = a[(i, j)];
                if v.to_bits() != a[(j, i)].to_bits() {
                    return Err(Error::Structure(format!("asymmetric at ({i}, {j})")));
                }
                if v != 0.0 || i == j {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self::from_csc(dim, col_ptr, row_idx, values)
    }

    /// Structural symmetry, sorted unique rows and a present diagonal.
    pub fn check_structure(&self) -> Result<()> {
        for j in 0..self.dim {
            let rows = self.col_rows(j);
            if rows.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Structure(format!(
                    "column {j} rows not strictly ascending"
                )));
            }
            if rows.last().is_some_and(|&r| r >= self.dim) {
                return Err(Error::Structure(format!(
                    "row index out of range in column {j}"
                )));
            }
            if rows.binary_search(&j).is_err() {
                return Err(Error::Structure(format!("missing diagonal in column {j}")));
            }
            for &i in rows {
                if self.col_rows(i).binary_search(&j).is_err() {
                    return Err(Error::Structure(format!(
                        "entry ({i}, {j}) has no mirror ({j}, {i})"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored entries, both triangles.
    #[inline]
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Stored entries in the lower triangle, diagonal included.
    pub fn nnz_lower(&self) -> usize {
        (0..self.dim)
            .map(|j| self.col_rows(j).iter().filter(|&&i| i >= j).count())
            .sum()
    }

    #[inline]
    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    #[inline]
    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn col_rows(&self, j: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    #[inline]
    pub fn col_values(&self, j: usize) -> &[f64] {
        &self.values[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    /// Iterates `(row, value)` over the lower triangle of column `j`.
    pub fn lower_col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.col_rows(j)
            .iter()
            .copied()
            .zip(self.col_values(j).iter().copied())
            .filter(move |&(i, _)| i >= j)
    }

    /// Identifies the structure (`col_ptr`, `row_idx`), not the values.
    #[inline]
    pub fn pattern_id(&self) -> u64 {
        self.pattern_id
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| {
                let k = self
                    .col_rows(j)
                    .binary_search(&j)
                    .expect("diagonal present");
                self.col_values(j)[k]
            })
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.col_rows(j).binary_search(&i) {
            Ok(k) => self.col_values(j)[k],
            Err(_) => 0.0,
        }
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            for (&i, &a) in self.col_rows(j).iter().zip(self.col_values(j)) {
                out[i] += a * vj;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let mut d = Matrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for (&i, &v) in self.col_rows(j).iter().zip(self.col_values(j)) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Recomputes every stored value at a new dual point and shift without
    /// touching the structure.
    pub fn update_values(&mut self, x: &DualPoint, p: &ProblemInstance, tau: f64) -> Result<()> {
        let g = fused_gradient(x, p);
        self.update_values_with(x, p, tau, &g)
    }

    /// Like [`SparseSym::update_values`], reusing plan marginals already
    /// computed at `x`.
    pub fn update_values_with(
        &mut self,
        x: &DualPoint,
        p: &ProblemInstance,
        tau: f64,
        g: &GradientResult,
    ) -> Result<()> {
        match self.layout {
            Some(layout) if layout == (p.n(), p.m()) => {}
            _ => {
                return Err(Error::Structure(
                    "matrix was not assembled for this problem shape".into(),
                ))
            }
        }
        fill_values(self, x, p, tau, g);
        Ok(())
    }
}

/// Writes `eta^-1 [diag(T 1), T^Omega ; (T^Omega)^T, diag(T^T 1)] + tau I`
/// into the structure of `a`, which must use the transport layout.
fn fill_values(
    a: &mut SparseSym,
    x: &DualPoint,
    p: &ProblemInstance,
    tau: f64,
    g: &GradientResult,
) {
    let n = p.n();
    let inv_eta = 1.0 / p.eta();
    let cost = p.cost();
    let (alpha, beta) = (x.alpha(), x.beta());
    for c in 0..a.dim {
        for k in a.col_ptr[c]..a.col_ptr[c + 1] {
            let r = a.row_idx[k];
            a.values[k] = if r == c {
                let mass = if c < n {
                    g.row_sums[c]
                } else {
                    g.col_sums[c - n]
                };
                mass * inv_eta + tau
            } else {
                let (i, j) = if c < n { (c, r - n) } else { (r, c - n) };
                kernel(alpha[i], beta[j], cost[(i, j)], inv_eta) * inv_eta
            };
        }
    }
}

/// Assembles `H_Omega + tau I`. Diagonals use the full plan marginals;
/// off-diagonal entries appear only at `omega`.
pub fn assemble(
    x: &DualPoint,
    p: &ProblemInstance,
    omega: &SparsityPattern,
    tau: f64,
) -> SparseSym {
    let g = fused_gradient(x, p);
    assemble_with(x, p, omega, tau, &g)
}

/// [`assemble`] with plan marginals already computed at `x`.
pub fn assemble_with(
    x: &DualPoint,
    p: &ProblemInstance,
    omega: &SparsityPattern,
    tau: f64,
    g: &GradientResult,
) -> SparseSym {
    let (n, m) = (p.n(), p.m());
    assert_eq!((omega.n(), omega.m()), (n, m), "pattern shape mismatch");
    let dim = n + m - 1;

    // Alpha columns list their beta rows in ascending j because coords are
    // sorted by (i, j); beta columns collect alpha rows in ascending i.
    let mut per_beta: Vec<Vec<usize>> = vec![Vec::new(); m - 1];
    let mut alpha_cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in omega.coords() {
        alpha_cols[i].push(n + j);
        per_beta[j].push(i);
    }
    let mut col_ptr = Vec::with_capacity(dim + 1);
    let mut row_idx = Vec::with_capacity(dim + 2 * omega.len());
    col_ptr.push(0);
    for (i, rows) in alpha_cols.iter().enumerate() {
        row_idx.push(i);
        row_idx.extend_from_slice(rows);
        col_ptr.push(row_idx.len());
    }
    for (j, rows) in per_beta.iter().enumerate() {
        row_idx.extend_from_slice(rows);
        row_idx.push(n + j);
        col_ptr.push(row_idx.len());
    }
    let pattern_id = hash_pattern(&col_ptr, &row_idx);
    let mut a = SparseSym {
        dim,
        values: vec![0.0; row_idx.len()],
        col_ptr,
        row_idx,
        layout: Some((n, m)),
        pattern_id,
    };
    fill_values(&mut a, x, p, tau, g);
    a
}

/// Free-function form of [`SparseSym::update_values`].
pub fn update_values(
    a: &mut SparseSym,
    x: &DualPoint,
    p: &ProblemInstance,
    tau: f64,
) -> Result<()> {
    a.update_values(x, p, tau)
}
