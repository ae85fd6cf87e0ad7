//! Compressed sparse row matrices.

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{AfemError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed in
    /// insertion order, so equal inputs give bitwise-equal matrices.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut count = vec![0usize; n_rows + 1];
        for &(r, _, _) in triplets {
            count[r + 1] += 1;
        }
        for i in 0..n_rows {
            count[i + 1] += count[i];
        }
        let mut next = count.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..n_rows {
            let (lo, hi) = (count[r], count[r + 1]);
            order.clear();
            order.extend(lo..hi);
            // stable: keeps insertion order within equal columns
            order.sort_by_key(|&i| cols[i]);
            let mut last = usize::MAX;
            for &i in &order {
                if cols[i] == last {
                    *values.last_mut().unwrap() += vals[i];
                } else {
                    col_idx.push(cols[i]);
                    values.push(vals[i]);
                    last = cols[i];
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(i) => self.values[lo + i],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        for (r, yr) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut s = 0.0;
            for i in lo..hi {
                s += self.values[i] * x[self.col_idx[i]];
            }
            *yr = s;
        }
    }

    /// `y = A^T x`.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_cols];
        for (r, &xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                y[c] += v * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut trip = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                trip.push((c, r, v));
            }
        }
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, &trip)
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n_rows)
            .map(|r| x[r] * self.row(r).map(|(c, v)| v * y[c]).sum::<f64>())
            .sum()
    }

    /// Submatrix with the given rows and columns. `col_index[c]` maps a global
    /// column to its position, or `usize::MAX` if the column is dropped.
    pub fn select(&self, rows: &[usize], col_index: &[usize], n_cols: usize) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &r in rows {
            let start = col_idx.len();
            for (c, v) in self.row(r) {
                let j = col_index[c];
                if j != usize::MAX {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            // column relabelling may break the ordering
            let mut pairs: Vec<(usize, f64)> =
                col_idx[start..].iter().copied().zip(values[start..].iter().copied()).collect();
            pairs.sort_by_key(|p| p.0);
            for (k, (c, v)) in pairs.into_iter().enumerate() {
                col_idx[start + k] = c;
                values[start + k] = v;
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n_rows: rows.len(), n_cols, row_ptr, col_idx, values }
    }

    /// Largest absolute entry of `A - A^T`.
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                m = m.max((v - self.get(c, r)).abs());
            }
        }
        m
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut trip = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                trip.push(Triplet::new(r, c, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &trip)
            .map_err(|e| AfemError::Solver(format!("sparse conversion failed: {e:?}")))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 0, 2.0), (0, 1, 3.0), (1, 1, 5.0)]);
        assert_eq!(m.row_ptr, vec![0, 2, 3]);
        assert_eq!(m.col_idx, vec![0, 1, 1]);
        assert_eq!(m.values, vec![2.0, 4.0, 5.0]);
    }

    #[test]
    fn transpose_products() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.5), (1, 0, -2.0), (1, 1, 4.0)]);
        let x = [1.0, 2.0];
        assert_eq!(m.mul_transpose_vec(&x), m.transpose().mul_vec(&x));
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![1.5, 2.0]);
    }

    #[test]
    fn select_block() {
        let m = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (0, 2, 2.0), (2, 0, 3.0), (2, 2, 4.0)]);
        let idx = [1, usize::MAX, 0];
        let s = m.select(&[2, 0], &idx, 2);
        assert_eq!(s.get(0, 0), 4.0);
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 2.0);
    }
}
