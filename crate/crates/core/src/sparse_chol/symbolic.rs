use crate::error::{Error, Result};
use crate::sparsify::SparseSym;

use super::ordering::{invert, is_permutation, minimum_degree};

/// Ordering choice for [`symbolic_analyze_with`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderingMethod {
    MinimumDegree,
    Natural,
    /// Caller-supplied `perm[new] = old`.
    Given(Vec<usize>),
}

/// Structure-only part of a sparse Cholesky factorization of `P^T A P`.
///
/// Depends only on the pattern of `A`, so it can be built once and reused
/// for every matrix with the same (or a covered) pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicFactor {
    dim: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    parent: Vec<Option<usize>>,
    /// Column-compressed pattern of `L`; each column starts with its diagonal.
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    /// Row-compressed view of the strictly lower part of `L`: for row `k`,
    /// the columns `j < k` (ascending) and the value slot of `L[k, j]`.
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_slots: Vec<usize>,
    source_pattern_id: u64,
}

impl SymbolicFactor {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `perm[new] = old`.
    #[inline]
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// `iperm[old] = new`.
    #[inline]
    pub fn iperm(&self) -> &[usize] {
        &self.iperm
    }

    /// Elimination tree of `P^T A P`; roots have no parent.
    #[inline]
    pub fn etree(&self) -> &[Option<usize>] {
        &self.parent
    }

    #[inline]
    pub fn l_col_ptr(&self) -> &[usize] {
        &self.l_col_ptr
    }

    #[inline]
    pub fn l_row_idx(&self) -> &[usize] {
        &self.l_row_idx
    }

    /// Number of stored entries of `L`, diagonal included.
    #[inline]
    pub fn nnz_l(&self) -> usize {
        self.l_row_idx.len()
    }

    #[inline]
    pub fn source_pattern_id(&self) -> u64 {
        self.source_pattern_id
    }

    pub(crate) fn row_entries(&self, k: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.row_ptr[k]..self.row_ptr[k + 1];
        self.row_cols[r.clone()]
            .iter()
            .copied()
            .zip(self.row_slots[r].iter().copied())
    }

    /// Whether every lower entry of `P^T A P` lies inside the `L` pattern,
    /// i.e. `A` can be factorized with this symbolic structure.
    pub fn covers(&self, a: &SparseSym) -> bool {
        if a.dim() != self.dim {
            return false;
        }
        if a.pattern_id() == self.source_pattern_id {
            return true;
        }
        (0..self.dim).all(|k| {
            let cols = &self.row_cols[self.row_ptr[k]..self.row_ptr[k + 1]];
            a.col_rows(self.perm[k]).iter().all(|&r| {
                let i = self.iperm[r];
                i >= k || cols.binary_search(&i).is_ok()
            })
        })
    }
}

/// Symbolic analysis with the default minimum-degree ordering.
pub fn symbolic_analyze(a: &SparseSym) -> Result<SymbolicFactor> {
    symbolic_analyze_with(a, OrderingMethod::MinimumDegree)
}

/// Orders `A`, builds the elimination tree of `P^T A P` and the exact
/// pattern of its Cholesky factor.
pub fn symbolic_analyze_with(a: &SparseSym, ordering: OrderingMethod) -> Result<SymbolicFactor> {
    a.check_structure()?;
    let dim = a.dim();
    let perm = match ordering {
        OrderingMethod::MinimumDegree => minimum_degree(a),
        OrderingMethod::Natural => (0..dim).collect(),
        OrderingMethod::Given(p) => {
            if p.len() != dim || !is_permutation(&p) {
                return Err(Error::Structure("ordering is not a permutation".into()));
            }
            p
        }
    };
    let iperm = invert(&perm);

    // Upper part of column k of C = P^T A P: rows i < k.
    let upper = |k: usize| -> Vec<usize> {
        let mut rows: Vec<usize> = a
            .col_rows(perm[k])
            .iter()
            .map(|&r| iperm[r])
            .filter(|&i| i < k)
            .collect();
        rows.sort_unstable();
        rows
    };

    // Elimination tree with path compression through `ancestor`.
    let mut parent = vec![None; dim];
    let mut ancestor: Vec<Option<usize>> = vec![None; dim];
    for k in 0..dim {
        for mut i in upper(k) {
            while let Some(next) = ancestor[i] {
                if next == k {
                    break;
                }
                ancestor[i] = Some(k);
                i = next;
            }
            if ancestor[i].is_none() {
                ancestor[i] = Some(k);
                parent[i] = Some(k);
            }
        }
    }

    // Row patterns: the etree paths from each upper entry of column k up to k.
    let mut mark = vec![usize::MAX; dim];
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut row_cols = Vec::new();
    row_ptr.push(0);
    let mut col_count = vec![1usize; dim];
    for k in 0..dim {
        mark[k] = k;
        let start = row_cols.len();
        for i in upper(k) {
            let mut j = i;
            while mark[j] != k {
                mark[j] = k;
                row_cols.push(j);
                col_count[j] += 1;
                j = parent[j].expect("upper entries reach k through the etree");
            }
        }
        row_cols[start..].sort_unstable();
        row_ptr.push(row_cols.len());
    }

    let mut l_col_ptr = Vec::with_capacity(dim + 1);
    l_col_ptr.push(0);
    for &c in &col_count {
        l_col_ptr.push(l_col_ptr.last().unwrap() + c);
    }
    let nnz = *l_col_ptr.last().unwrap();
    let mut l_row_idx = vec![0; nnz];
    let mut next: Vec<usize> = l_col_ptr[..dim].to_vec();
    for j in 0..dim {
        l_row_idx[next[j]] = j;
        next[j] += 1;
    }
    let mut row_slots = vec![0; row_cols.len()];
    for k in 0..dim {
        for idx in row_ptr[k]..row_ptr[k + 1] {
            let j = row_cols[idx];
            l_row_idx[next[j]] = k;
            row_slots[idx] = next[j];
            next[j] += 1;
        }
    }

    Ok(SymbolicFactor {
        dim,
        perm,
        iperm,
        parent,
        l_col_ptr,
        l_row_idx,
        row_ptr,
        row_cols,
        row_slots,
        source_pattern_id: a.pattern_id(),
    })
}
