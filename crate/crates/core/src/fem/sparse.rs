//! Compressed sparse rows for assembly and matrix-vector products.

use faer::sparse::{SparseColMat, Triplet};

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` entries; duplicates are summed
    /// in input order, which keeps the result independent of hashing.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = (usize::MAX, usize::MAX);
        for (r, c, v) in entries {
            if (r, c) == last {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = (r, c);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.vals.iter().all(|v| *v == 0.0)
    }

    pub fn plus(&self, other: &CsrMatrix) -> Self {
        let mut entries = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for i in 0..m.n {
                entries.extend(m.row(i).map(|(j, v)| (i, j, v)));
            }
        }
        Self::from_triplets(self.n.max(other.n), entries)
    }

    /// Restriction to the index set `keep` (given as old → new map).
    pub fn restrict(&self, map: &[Option<usize>], m: usize) -> Self {
        let mut entries = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            if let Some(ni) = map[i] {
                for (j, v) in self.row(i) {
                    if let Some(nj) = map[j] {
                        entries.push((ni, nj, v));
                    }
                }
            }
        }
        Self::from_triplets(m, entries)
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                t.push(Triplet::new(i, j, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| Error::Solver(format!("sparse matrix construction failed: {e:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_products_agree() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (2, 1, 2.0), (0, 0, 3.0), (1, 2, -1.0), (1, 1, 5.0)]);
        assert_eq!(a.nnz(), 4);
        let y = a.mul_vec(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![4.0, 7.0, 4.0]);
        assert_eq!(a.quad_form(&[1.0, 2.0, 3.0]), 4.0 + 14.0 + 12.0);
        let r = a.restrict(&[Some(0), None, Some(1)], 2);
        assert_eq!(r.mul_vec(&[1.0, 1.0]), vec![4.0, 0.0]);
    }
}
