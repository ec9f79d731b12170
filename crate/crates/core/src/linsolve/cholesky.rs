//! Up-looking sparse Cholesky factorization `P M Pᵀ = L Lᵀ`.

use super::{SolveError, SparseMatrix};

const NONE: usize = usize::MAX;

/// Lower-triangular factor stored by columns; the diagonal entry is first in
/// each column, followed by strictly increasing row indices.
#[derive(Debug, Clone)]
pub(crate) struct CholeskyFactor {
    n: usize,
    /// `perm[k]` = original index at permuted position `k`.
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Result of a numeric factorization attempt.
pub(crate) struct Pivots {
    /// Pivots (squared diagonal of `L`) in elimination order.
    pub values: Vec<f64>,
}

impl CholeskyFactor {
    /// Factorizes symmetric `m` (full pattern stored) under permutation `perm`,
    /// adding `shift` to every diagonal entry.
    pub fn factorize(m: &SparseMatrix, perm: Vec<usize>, shift: f64) -> Result<(Self, Pivots), SolveError> {
        let n = m.rows();
        let mut pinv = vec![0usize; n];
        for (k, &i) in perm.iter().enumerate() {
            pinv[i] = k;
        }
        // Upper triangle of the permuted matrix, by column.
        let mut triplets: Vec<(usize, usize, f64)> = m
            .entries()
            .filter_map(|(r, c, v)| {
                let (pr, pc) = (pinv[r], pinv[c]);
                (pr <= pc).then_some((pc, pr, v))
            })
            .collect();
        for k in 0..n {
            triplets.push((k, k, shift));
        }
        // Rows of `upper` are columns of the permuted upper triangle.
        let upper = SparseMatrix::from_triplets(n, n, triplets)?;

        let parent = etree(&upper);
        let counts = column_counts(&upper, &parent);
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + counts[k];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        let mut next = col_ptr[..n].to_vec();
        let mut x = vec![0.0f64; n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];
        let mut pivots = Vec::with_capacity(n);

        for k in 0..n {
            let top = ereach(&upper, k, &parent, &mut stack, &mut mark);
            for (i, v) in upper.row(k) {
                if i <= k {
                    x[i] = v;
                }
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..n] {
                let lki = x[i] / values[col_ptr[i]];
                x[i] = 0.0;
                for p in col_ptr[i] + 1..next[i] {
                    x[row_idx[p]] -= values[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                row_idx[p] = k;
                values[p] = lki;
            }
            pivots.push(d);
            if !(d > 0.0) || !d.is_finite() {
                return Err(SolveError::NotPositiveDefinite { pivot: k, value: d });
            }
            let p = next[k];
            next[k] += 1;
            row_idx[p] = k;
            values[p] = d.sqrt();
        }

        Ok((Self { n, perm, col_ptr, row_idx, values }, Pivots { values: pivots }))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Solves `M x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        // L y = P b
        for j in 0..n {
            let start = self.col_ptr[j];
            y[j] /= self.values[start];
            let yj = y[j];
            for p in start + 1..self.col_ptr[j + 1] {
                y[self.row_idx[p]] -= self.values[p] * yj;
            }
        }
        // Lᵀ x = y
        for j in (0..n).rev() {
            let start = self.col_ptr[j];
            let mut s = y[j];
            for p in start + 1..self.col_ptr[j + 1] {
                s -= self.values[p] * y[self.row_idx[p]];
            }
            y[j] = s / self.values[start];
        }
        for (k, &i) in self.perm.iter().enumerate() {
            b[i] = y[k];
        }
    }
}

/// Elimination tree of a symmetric matrix given its upper triangle by column.
fn etree(upper: &SparseMatrix) -> Vec<usize> {
    let n = upper.rows();
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for (mut i, _) in upper.row(k) {
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L`, returned in `stack[top..]` in
/// topological order.
fn ereach(upper: &SparseMatrix, k: usize, parent: &[usize], stack: &mut [usize], mark: &mut [usize]) -> usize {
    let n = upper.rows();
    let mut top = n;
    mark[k] = k;
    for (start, _) in upper.row(k) {
        if start > k {
            continue;
        }
        let mut i = start;
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

fn column_counts(upper: &SparseMatrix, parent: &[usize]) -> Vec<usize> {
    let n = upper.rows();
    let mut counts = vec![1usize; n];
    let mut stack = vec![0usize; n];
    let mut mark = vec![NONE; n];
    for k in 0..n {
        let top = ereach(upper, k, parent, &mut stack, &mut mark);
        for &i in &stack[top..n] {
            counts[i] += 1;
        }
    }
    counts
}
