//! Sparse LDLᵀ factorization of symmetric quasi-definite / indefinite matrices
//! with a fixed pattern.
//!
//! The symbolic phase (ordering, elimination tree, column counts) runs once
//! per pattern; numeric refactorizations reuse it. No pivoting is performed,
//! so the ordering keeps every constraint row behind at least one primal
//! neighbour, which leaves its pivot structurally nonzero, and every primal
//! without curvature behind one of its constraint rows, so its pivot does not
//! hinge on a vanishing barrier term.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;

const NONE: usize = usize::MAX;

/// Reason a numeric factorization stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdlError {
    /// Pivot at position `k` of the permuted matrix was (numerically) zero.
    ZeroPivot(usize),
}

/// Elimination role of a node of a KKT matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    /// Primal variable with a structural diagonal; eligible at once.
    Primal,
    /// Primal variable without curvature; waits for a neighbouring constraint.
    LinearPrimal,
    /// Constraint row; waits for a neighbouring primal.
    Constraint,
}

impl NodeRole {
    fn ready(self) -> bool {
        self == NodeRole::Primal
    }

    /// Whether eliminating a `self` node lets a waiting `other` neighbour go.
    fn releases(self, other: NodeRole) -> bool {
        match other {
            NodeRole::Primal => false,
            NodeRole::LinearPrimal => self == NodeRole::Constraint,
            NodeRole::Constraint => self != NodeRole::Constraint,
        }
    }
}

/// Fixed sparsity pattern of a symmetric matrix, entries given as `(row, col)`
/// in either triangle. Duplicates are summed.
#[derive(Debug, Clone)]
pub struct SymbolicLdl {
    n: usize,
    perm: Vec<usize>,
    // upper-triangular CSC of P A Pᵀ
    ap: Vec<usize>,
    ai: Vec<usize>,
    // slot in `ax` for every input entry
    slot_of_entry: Vec<usize>,
    etree: Vec<usize>,
    lp: Vec<usize>,
}

/// Numeric factor produced by [`SymbolicLdl::factor`].
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    ap: Vec<usize>,
    ai: Vec<usize>,
    ax: Vec<f64>,
    positive: usize,
    negative: usize,
}

impl SymbolicLdl {
    /// `entries` describes the pattern; `roles` decides which nodes must
    /// wait for a neighbour before they are eliminated.
    pub fn new(n: usize, entries: &[(usize, usize)], roles: &[NodeRole]) -> Self {
        assert_eq!(roles.len(), n);
        let perm = min_degree_order(n, entries, roles);
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }

        // permuted upper-triangular coordinates, diagonal always present
        let mut coords: Vec<(usize, usize)> = entries
            .iter()
            .map(|&(r, c)| {
                let (a, b) = (inv[r], inv[c]);
                (a.min(b), a.max(b))
            })
            .collect();
        coords.extend((0..n).map(|k| (k, k)));
        let mut unique = coords.clone();
        unique.sort_by_key(|&(r, c)| (c, r));
        unique.dedup();

        let mut ap = vec![0; n + 1];
        let mut ai = Vec::with_capacity(unique.len());
        for &(r, c) in &unique {
            ap[c + 1] += 1;
            ai.push(r);
        }
        for k in 0..n {
            ap[k + 1] += ap[k];
        }
        let slot_of_entry = coords[..entries.len()]
            .iter()
            .map(|rc| unique.binary_search_by_key(&(rc.1, rc.0), |&(r, c)| (c, r)).expect("entry present"))
            .collect();

        // elimination tree and column counts
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &i0 in &ai[ap[j]..ap[j + 1]] {
                let mut i = i0;
                if i == j {
                    continue;
                }
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }

        SymbolicLdl { n, perm, ap, ai, slot_of_entry, etree, lp }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Factors the matrix whose entry values are `values` (aligned with the
    /// pattern passed to [`new`](Self::new)). `pivot_tol` is an absolute
    /// threshold below which a pivot counts as zero.
    pub fn factor(&self, values: &[f64], pivot_tol: f64) -> Result<LdlFactor, LdlError> {
        let n = self.n;
        let mut ax = vec![0.0; self.ai.len()];
        for (&slot, &v) in self.slot_of_entry.iter().zip(values) {
            ax[slot] += v;
        }

        let nnz = self.lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut d = vec![0.0; n];
        let mut dinv = vec![0.0; n];
        let mut next_space: Vec<usize> = self.lp[..n].to_vec();
        let mut y_vals = vec![0.0; n];
        let mut y_marker = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let (mut positive, mut negative) = (0, 0);

        for k in 0..n {
            let mut nnz_y = 0;
            for p in self.ap[k]..self.ap[k + 1] {
                let b = self.ai[p];
                if b == k {
                    d[k] = ax[p];
                    continue;
                }
                y_vals[b] = ax[p];
                if y_marker[b] {
                    continue;
                }
                y_marker[b] = true;
                elim[0] = b;
                let mut n_elim = 1;
                let mut next = self.etree[b];
                while next != NONE && next < k {
                    if y_marker[next] {
                        break;
                    }
                    y_marker[next] = true;
                    elim[n_elim] = next;
                    n_elim += 1;
                    next = self.etree[next];
                }
                while n_elim > 0 {
                    n_elim -= 1;
                    y_idx[nnz_y] = elim[n_elim];
                    nnz_y += 1;
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let space = next_space[c];
                let yc = y_vals[c];
                for j in self.lp[c]..space {
                    y_vals[li[j]] -= lx[j] * yc;
                }
                li[space] = k;
                lx[space] = yc * dinv[c];
                d[k] -= yc * lx[space];
                next_space[c] += 1;
                y_vals[c] = 0.0;
                y_marker[c] = false;
            }
            if !(d[k].abs() > pivot_tol) {
                return Err(LdlError::ZeroPivot(k));
            }
            if d[k] > 0.0 {
                positive += 1;
            } else {
                negative += 1;
            }
            dinv[k] = 1.0 / d[k];
        }

        Ok(LdlFactor {
            n,
            perm: self.perm.clone(),
            lp: self.lp.clone(),
            li,
            lx,
            d,
            dinv,
            ap: self.ap.clone(),
            ai: self.ai.clone(),
            ax,
            positive,
            negative,
        })
    }
}

impl LdlFactor {
    /// `(positive, negative)` pivot counts: the inertia of the matrix.
    pub fn inertia(&self) -> (usize, usize) {
        (self.positive, self.negative)
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.d
    }

    /// Solves `A x = b`, followed by `refine_steps` rounds of iterative refinement.
    pub fn solve(&self, b: &[f64], refine_steps: usize) -> Vec<f64> {
        let n = self.n;
        let pb: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        let mut x = pb.clone();
        self.solve_permuted(&mut x);
        for _ in 0..refine_steps {
            let mut r = pb.clone();
            self.sub_matvec_permuted(&x, &mut r);
            let rmax = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if rmax == 0.0 {
                break;
            }
            self.solve_permuted(&mut r);
            for k in 0..n {
                x[k] += r[k];
            }
        }
        let mut out = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = x[k];
        }
        out
    }

    fn solve_permuted(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                x[self.li[j]] -= self.lx[j] * xi;
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                s -= self.lx[j] * x[self.li[j]];
            }
            x[i] = s;
        }
    }

    // r -= (P A Pᵀ) x
    fn sub_matvec_permuted(&self, x: &[f64], r: &mut [f64]) {
        for c in 0..self.n {
            for p in self.ap[c]..self.ap[c + 1] {
                let row = self.ai[p];
                let v = self.ax[p];
                r[row] -= v * x[c];
                if row != c {
                    r[c] -= v * x[row];
                }
            }
        }
    }
}

/// Greedy minimum-degree ordering on the explicit elimination graph among
/// the released nodes. Ties break on the lowest index, so the ordering is
/// deterministic.
fn min_degree_order(n: usize, entries: &[(usize, usize)], roles: &[NodeRole]) -> Vec<usize> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(r, c) in entries {
        if r != c {
            adj[r].insert(c);
            adj[c].insert(r);
        }
    }
    let mut released: Vec<bool> = roles.iter().map(|r| r.ready()).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = |eligible_only: bool| {
            (0..n).filter(|&v| !done[v] && (!eligible_only || released[v])).min_by_key(|&v| (adj[v].len(), v))
        };
        let v = pick(true).or_else(|| pick(false)).expect("node left");
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &a) in nbrs.iter().enumerate() {
            adj[a].remove(&v);
            if roles[v].releases(roles[a]) {
                released[a] = true;
            }
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        adj[v].clear();
        done[v] = true;
        order.push(v);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Pattern = (usize, Vec<(usize, usize)>, Vec<f64>, Vec<NodeRole>);

    fn kkt_fixture(seed: u64, n: usize, m: usize) -> Pattern {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = n + m;
        let mut entries = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            entries.push((i, i));
            values.push(rng.gen_range(1.0..4.0));
            if i > 0 && rng.gen_bool(0.3) {
                entries.push((i, i - 1));
                values.push(rng.gen_range(-0.5..0.5));
            }
        }
        for r in 0..m {
            // each constraint touches two or three variables
            let cols: BTreeSet<usize> = (0..3).map(|_| rng.gen_range(0..n)).collect();
            for c in cols {
                entries.push((n + r, c));
                values.push(rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
            }
        }
        let roles = (0..dim).map(|k| if k >= n { NodeRole::Constraint } else { NodeRole::Primal }).collect();
        (dim, entries, values, roles)
    }

    fn dense(dim: usize, entries: &[(usize, usize)], values: &[f64]) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(dim, dim);
        for (&(r, c), &v) in entries.iter().zip(values) {
            a[(r, c)] += v;
            if r != c {
                a[(c, r)] += v;
            }
        }
        a
    }

    #[test]
    fn matches_dense_oracle_on_kkt_matrices() {
        for seed in 0..20 {
            let (dim, entries, values, roles) = kkt_fixture(seed, 12, 5);
            let sym = SymbolicLdl::new(dim, &entries, &roles);
            let f = sym.factor(&values, 1e-13).expect("nonsingular");
            let a = dense(dim, &entries, &values);
            let b: Vec<f64> = (0..dim).map(|k| (k as f64 * 0.37).sin()).collect();
            let x = f.solve(&b, 1);
            let oracle = a.clone().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
            for k in 0..dim {
                assert!((x[k] - oracle[k]).abs() < 1e-9 * (1.0 + oracle[k].abs()), "seed {seed} k {k}");
            }
            let eig = a.symmetric_eigen().eigenvalues;
            let pos = eig.iter().filter(|&&e| e > 0.0).count();
            assert_eq!(f.inertia(), (pos, dim - pos), "seed {seed}");
        }
    }

    #[test]
    fn quasi_definite_inertia() {
        let (dim, entries, values, roles) = kkt_fixture(7, 10, 4);
        let f = SymbolicLdl::new(dim, &entries, &roles).factor(&values, 1e-13).unwrap();
        // full-row-rank J with positive definite H: n positive, m negative
        assert_eq!(f.inertia(), (10, 4));
    }

    #[test]
    fn zero_pivot_reported() {
        // [[1, 1], [1, 1]] is singular
        let entries = [(0, 0), (1, 0), (1, 1)];
        let sym = SymbolicLdl::new(2, &entries, &[NodeRole::Primal; 2]);
        assert!(matches!(sym.factor(&[1.0, 1.0, 1.0], 1e-13), Err(LdlError::ZeroPivot(_))));
    }

    #[test]
    fn duplicates_are_summed_and_upper_entries_accepted() {
        let entries = [(0, 0), (0, 0), (0, 1), (1, 1)];
        let f = SymbolicLdl::new(2, &entries, &[NodeRole::Primal; 2]).factor(&[1.0, 1.0, 1.0, 3.0], 0.0).unwrap();
        // A = [[2, 1], [1, 3]]
        let x = f.solve(&[3.0, 4.0], 0);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ordering_is_deterministic() {
        let (dim, entries, _, roles) = kkt_fixture(3, 15, 6);
        let a = SymbolicLdl::new(dim, &entries, &roles);
        let b = SymbolicLdl::new(dim, &entries, &roles);
        assert_eq!(a.perm, b.perm);
        assert_eq!(a.factor_nnz(), b.factor_nnz());
    }
}
