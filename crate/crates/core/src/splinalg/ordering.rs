//! Fill-reducing ordering and symbolic elimination.
//!
//! The ordering is a greedy minimum-degree ordering on the explicit elimination
//! graph. Eliminating a vertex turns its remaining neighbourhood into a clique,
//! and that neighbourhood is exactly the below-diagonal pattern of the matching
//! factor column, so the symbolic factor falls out of the ordering for free.

use std::collections::BTreeSet;

use super::sparse::CscMatrix;

/// Permutation plus the filled (structurally symmetric) factor pattern.
///
/// Shared between the Cholesky and the static-pivot LU factorizations; every
/// matrix whose pattern is contained in the analysed pattern can reuse it.
#[derive(Debug, Clone)]
pub struct Symbolic {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `iperm[old] = new`
    iperm: Vec<usize>,
    /// Strictly-lower pattern of each factor column, in permuted indices, ascending.
    col_pattern: Vec<Vec<usize>>,
    /// For each permuted row `i`, the columns `j < i` with `L(i, j) != 0`, ascending.
    row_lists: Vec<Vec<usize>>,
}

impl Symbolic {
    /// Analyses the symmetrized off-diagonal pattern of `m`.
    pub fn analyze(m: &CscMatrix) -> Self {
        let n = m.dim();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for j in 0..n {
            for (i, _) in m.column(j) {
                if i != j {
                    adj[i].insert(j);
                    adj[j].insert(i);
                }
            }
        }
        let mut eliminated = vec![false; n];
        let mut perm = Vec::with_capacity(n);
        let mut neighbourhoods: Vec<Vec<usize>> = Vec::with_capacity(n);
        for _ in 0..n {
            // ties go to the lowest original index
            let v = (0..n)
                .filter(|&v| !eliminated[v])
                .min_by_key(|&v| (adj[v].len(), v))
                .expect("at least one vertex remains");
            eliminated[v] = true;
            let nb: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
            for (a, &u) in nb.iter().enumerate() {
                adj[u].remove(&v);
                for &w in &nb[a + 1..] {
                    adj[u].insert(w);
                    adj[w].insert(u);
                }
            }
            perm.push(v);
            neighbourhoods.push(nb);
        }
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let col_pattern: Vec<Vec<usize>> = neighbourhoods
            .into_iter()
            .map(|nb| {
                let mut p: Vec<usize> = nb.into_iter().map(|u| iperm[u]).collect();
                p.sort_unstable();
                p
            })
            .collect();
        let mut row_lists = vec![Vec::new(); n];
        for (j, pat) in col_pattern.iter().enumerate() {
            for &i in pat {
                row_lists[i].push(j);
            }
        }
        Self {
            n,
            perm,
            iperm,
            col_pattern,
            row_lists,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub(crate) fn iperm(&self) -> &[usize] {
        &self.iperm
    }

    pub(crate) fn col_pattern(&self, j: usize) -> &[usize] {
        &self.col_pattern[j]
    }

    pub(crate) fn row_list(&self, i: usize) -> &[usize] {
        &self.row_lists[i]
    }

    /// Number of stored below-diagonal factor entries.
    pub fn factor_nnz(&self) -> usize {
        self.col_pattern.iter().map(Vec::len).sum()
    }

    /// Whether the pattern of `m` is contained in the analysed pattern.
    pub fn covers(&self, m: &CscMatrix) -> bool {
        if m.dim() != self.n {
            return false;
        }
        for j in 0..self.n {
            for (i, _) in m.column(j) {
                if i == j {
                    continue;
                }
                let (a, b) = (self.iperm[i], self.iperm[j]);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                if self.col_pattern[lo].binary_search(&hi).is_err() {
                    return false;
                }
            }
        }
        true
    }
}
