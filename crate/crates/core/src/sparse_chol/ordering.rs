//! Fill-reducing orderings.

use std::collections::BTreeSet;

use crate::sparsify::SparseSym;

/// Minimum-degree ordering on the explicit elimination graph.
///
/// Repeatedly eliminates the vertex of smallest current degree (lowest
/// index on ties), turning its neighbourhood into a clique. Returns `perm`
/// with `perm[new] = old`.
pub fn minimum_degree(a: &SparseSym) -> Vec<usize> {
    let dim = a.dim();
    let mut adj: Vec<BTreeSet<usize>> = (0..dim)
        .map(|j| a.col_rows(j).iter().copied().filter(|&i| i != j).collect())
        .collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..dim).map(|v| (adj[v].len(), v)).collect();
    let mut perm = Vec::with_capacity(dim);

    while let Some((_, v)) = queue.pop_first() {
        perm.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            queue.remove(&(adj[u].len(), u));
            adj[u].remove(&v);
            for &w in &nbrs {
                if w != u {
                    adj[u].insert(w);
                }
            }
            queue.insert((adj[u].len(), u));
        }
    }
    perm
}

/// Inverse of a permutation.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![usize::MAX; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

/// Whether `perm` is a permutation of `0..len`.
pub fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter()
        .all(|&p| p < seen.len() && !std::mem::replace(&mut seen[p], true))
}
