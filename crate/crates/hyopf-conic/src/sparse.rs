//! Compressed sparse column storage and an LDL^T factorization for symmetric
//! quasi-definite systems.
//!
//! The factorization operates on the upper triangle of a symmetric matrix in
//! CSC layout and performs no pivoting: quasi-definite matrices (negative
//! definite leading block, positive definite trailing block, as produced by a
//! regularized KKT system) admit a stable LDL^T factorization in any symmetric
//! ordering, so a static ordering keeps the solver deterministic.

/// Sparse matrix in compressed sparse column format.
///
/// Row indices are strictly increasing within each column and duplicate
/// triplets are summed during construction.
#[derive(Debug, Clone)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for &(r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            cols[c].push((r, v));
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        col_ptr.push(0);
        for col in &mut cols {
            col.sort_by_key(|&(r, _)| r);
            let mut last: Option<usize> = None;
            for &(r, v) in col.iter() {
                if last == Some(r) {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(r);
                    values.push(v);
                    last = Some(r);
                }
            }
            col_ptr.push(row_idx.len());
        }
        CscMatrix { nrows, ncols, col_ptr, row_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Entries (row, value) of column `j`.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    /// Overwrites the value at (`i`, `j`); the position must exist in the pattern.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        let local = self.row_idx[range.clone()]
            .binary_search(&i)
            .unwrap_or_else(|_| panic!("({i}, {j}) not in sparsity pattern"));
        self.values[range.start + local] = v;
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj != 0.0 {
                for (i, v) in self.col(j) {
                    y[i] += v * xj;
                }
            }
        }
        y
    }

    /// y = A^T x
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for (i, v) in self.col(j) {
                acc += v * x[i];
            }
            y[j] = acc;
        }
        y
    }

    /// y = S x where `self` stores the upper triangle (including diagonal) of
    /// the symmetric matrix S.
    pub fn sym_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.nrows, self.ncols);
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                debug_assert!(i <= j, "upper-triangle storage expected");
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// All stored entries as (row, col, value) triplets.
    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                out.push((i, j, v));
            }
        }
        out
    }

    /// Rows of the matrix as (col, value) adjacency, i.e. the CSC layout of A^T.
    pub fn to_row_major(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.nrows];
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                rows[i].push((j, v));
            }
        }
        rows
    }
}

/// Symbolic structure of an LDL^T factorization: elimination tree and column
/// counts, computed once per sparsity pattern.
#[derive(Debug, Clone)]
pub struct LdlSymbolic {
    n: usize,
    parent: Vec<isize>,
    l_col_ptr: Vec<usize>,
}

/// Numeric LDL^T factors of a symmetric matrix given by its upper triangle.
#[derive(Debug, Clone)]
pub struct LdlFactors {
    n: usize,
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    l_values: Vec<f64>,
    d: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
#[error("zero or non-finite pivot at column {column} during LDL^T factorization")]
pub struct LdlError {
    pub column: usize,
}

impl LdlSymbolic {
    /// Analyzes the pattern of `a` (upper triangle, diagonal entries present).
    pub fn analyze(a: &CscMatrix) -> Self {
        let n = a.ncols();
        assert_eq!(a.nrows(), n);
        let mut parent = vec![-1isize; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_nz = vec![0usize; n];
        for j in 0..n {
            flag[j] = j;
            for (i, _) in a.col(j) {
                let mut k = i;
                while flag[k] != j {
                    if parent[k] == -1 {
                        parent[k] = j as isize;
                    }
                    l_nz[k] += 1;
                    flag[k] = j;
                    k = parent[k] as usize;
                }
            }
        }
        let mut l_col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            l_col_ptr[k + 1] = l_col_ptr[k] + l_nz[k];
        }
        LdlSymbolic { n, parent, l_col_ptr }
    }

    /// Factors `a` (same pattern as analyzed) into unit-lower L and diagonal D.
    pub fn factor(&self, a: &CscMatrix) -> Result<LdlFactors, LdlError> {
        self.factor_signed(a, &[], 0.0)
    }

    /// Like [`factor`](Self::factor), with dynamic pivot regularization for
    /// quasi-definite systems: `signs[j]` gives the expected pivot sign of
    /// column `j`, and any computed pivot on the wrong side of
    /// `signs[j]·eps` is replaced by exactly that value. Cancellation deep
    /// in an interior-point solve can otherwise flip a structurally
    /// guaranteed pivot; the replacement keeps the factorization usable and
    /// iterative refinement absorbs the perturbation. An empty `signs`
    /// disables the clamp.
    pub fn factor_signed(
        &self,
        a: &CscMatrix,
        signs: &[i8],
        eps: f64,
    ) -> Result<LdlFactors, LdlError> {
        let n = self.n;
        let nnz = self.l_col_ptr[n];
        let mut l_row_idx = vec![0usize; nnz];
        let mut l_values = vec![0.0f64; nnz];
        let mut d = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_next: Vec<usize> = self.l_col_ptr[..n].to_vec();

        for j in 0..n {
            // Scatter column j of A into the dense accumulator and collect the
            // nonzero pattern of row j of L in elimination order.
            let mut top = n;
            flag[j] = j;
            y[j] = 0.0;
            for (i, v) in a.col(j) {
                debug_assert!(i <= j, "upper-triangle storage expected");
                y[i] += v;
                let mut len = 0usize;
                let mut k = i;
                while flag[k] != j {
                    pattern[len] = k;
                    len += 1;
                    flag[k] = j;
                    k = self.parent[k] as usize;
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let mut dj = y[j];
            y[j] = 0.0;
            for &k in &pattern[top..n] {
                let yk = y[k];
                y[k] = 0.0;
                for p in self.l_col_ptr[k]..l_next[k] {
                    y[l_row_idx[p]] -= l_values[p] * yk;
                }
                let ljk = yk / d[k];
                dj -= ljk * yk;
                l_row_idx[l_next[k]] = j;
                l_values[l_next[k]] = ljk;
                l_next[k] += 1;
            }
            if !dj.is_finite() {
                return Err(LdlError { column: j });
            }
            match signs.get(j) {
                Some(&sign) if (sign as f64) * dj < eps => dj = sign as f64 * eps,
                None if dj == 0.0 => return Err(LdlError { column: j }),
                _ => {}
            }
            d[j] = dj;
        }
        Ok(LdlFactors {
            n,
            l_col_ptr: self.l_col_ptr.clone(),
            l_row_idx,
            l_values,
            d,
        })
    }
}

impl LdlFactors {
    /// Solves (L D L^T) x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for j in 0..self.n {
            let bj = b[j];
            if bj != 0.0 {
                for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                    b[self.l_row_idx[p]] -= self.l_values[p] * bj;
                }
            }
        }
        for j in 0..self.n {
            b[j] /= self.d[j];
        }
        for j in (0..self.n).rev() {
            let mut acc = b[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                acc -= self.l_values[p] * b[self.l_row_idx[p]];
            }
            b[j] = acc;
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csc_from_triplets_sums_duplicates() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 5.0)]);
        assert_eq!(a.nnz(), 2);
        let y = a.matvec(&[1.0, 1.0]);
        assert_eq!(y, vec![3.0, 5.0]);
    }

    #[test]
    fn matvec_transpose_agrees_with_dense() {
        let a = CscMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (1, 0, -2.0), (0, 2, 4.0)]);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![5.0, -2.0]);
        assert_eq!(a.matvec_t(&[1.0, 1.0]), vec![-1.0, 0.0, 4.0]);
    }

    #[test]
    fn sym_matvec_expands_upper_triangle() {
        // S = [[2, 1], [1, 3]] stored as upper triangle.
        let s = CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]);
        assert_eq!(s.sym_matvec(&[1.0, 2.0]), vec![4.0, 7.0]);
    }

    #[test]
    fn ldl_factors_quasi_definite_matrix() {
        // K = [[-2, 0, 1], [0, -3, 1], [1, 1, 1]] is quasi-definite.
        let k = CscMatrix::from_triplets(
            3,
            3,
            &[(0, 0, -2.0), (1, 1, -3.0), (0, 2, 1.0), (1, 2, 1.0), (2, 2, 1.0)],
        );
        let sym = LdlSymbolic::analyze(&k);
        let f = sym.factor(&k).unwrap();
        let b = vec![1.0, -1.0, 2.0];
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let r = k.sym_matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12, "residual too large: {r:?}");
        }
        // Sign pattern of D follows the quasi-definite structure.
        assert!(f.diagonal()[0] < 0.0 && f.diagonal()[1] < 0.0 && f.diagonal()[2] > 0.0);
    }

    #[test]
    fn ldl_reports_singular_matrix() {
        let k = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]);
        let sym = LdlSymbolic::analyze(&k);
        assert!(sym.factor(&k).is_err());
    }

    #[test]
    fn ldl_handles_fill_in() {
        // Arrow matrix: dense first row/column forces fill-in under natural order.
        let n = 6;
        let mut t = vec![(0usize, 0usize, 4.0f64)];
        for j in 1..n {
            t.push((j, j, 2.0 + j as f64));
            t.push((0, j, 1.0));
        }
        let k = CscMatrix::from_triplets(n, n, &t);
        let sym = LdlSymbolic::analyze(&k);
        let f = sym.factor(&k).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64) - 2.0).collect();
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let r = k.sym_matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-11);
        }
    }
}
