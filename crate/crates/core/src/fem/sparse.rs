use std::ops::AddAssign;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Entry: Copy + Default + AddAssign + PartialEq + Send + Sync {}
impl Entry for f64 {}
impl Entry for Complex64 {}

/// Coordinate-list accumulator. Duplicates are summed in insertion order
/// when the matrix is built, so the result does not depend on how the list
/// was filled as long as the insertion order is fixed.
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Entry> TripletBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, capacity: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn extend(&mut self, other: TripletBuilder<T>) {
        self.entries.extend(other.entries);
    }

    pub fn build(mut self) -> CsrMatrix<T> {
        // stable: equal (row, col) keep insertion order
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry pushed for this key") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

pub type ComplexSparseMatrix = CsrMatrix<Complex64>;
pub type RealSparseMatrix = CsrMatrix<f64>;

impl<T: Entry> CsrMatrix<T> {
    pub fn identity(n: usize, one: T) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![one; n],
        }
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::default(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut builder = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (r, c, v) in self.triplets() {
            builder.push(c, r, v);
        }
        builder.build()
    }

    pub fn map<U: Entry>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Keep rows and columns whose flag is false; replace the others by the
    /// identity. Used to impose homogeneous essential conditions.
    pub fn with_identity_block(&self, constrained: &[bool], one: T) -> Self {
        assert_eq!(constrained.len(), self.nrows);
        let mut builder = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.triplets() {
            if !constrained[r] && !constrained[c] {
                builder.push(r, c, v);
            }
        }
        for (r, flag) in constrained.iter().enumerate() {
            if *flag {
                builder.push(r, r, one);
            }
        }
        builder.build()
    }
}

impl<T: Entry + Into<Complex64>> CsrMatrix<T> {
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols, "matrix-vector dimension mismatch");
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v.into() * x[c]).sum())
            .collect()
    }

    /// `v^H A v`.
    pub fn quadratic_form(&self, v: &[Complex64]) -> Complex64 {
        self.mul_vec(v)
            .iter()
            .zip(v)
            .map(|(av, vi)| vi.conj() * av)
            .sum()
    }

    pub fn norm_one(&self) -> f64 {
        let mut col_sums = vec![0.0; self.ncols];
        for (_, c, v) in self.triplets() {
            col_sums[c] += v.into().norm();
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut dense = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            dense[(r, c)] += v.into();
        }
        dense
    }
}

impl RealSparseMatrix {
    pub fn mul_real(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matrix-vector dimension mismatch");
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }
}

/// `sum_k scale_k * M_k` for real matrices of equal shape.
pub fn linear_combination(terms: &[(Complex64, &RealSparseMatrix)]) -> Result<ComplexSparseMatrix> {
    let (nrows, ncols) = match terms.first() {
        Some((_, m)) => (m.nrows, m.ncols),
        None => {
            return Err(Error::InvalidArgument(
                "empty linear combination".into(),
            ))
        }
    };
    if terms.iter().any(|(_, m)| m.nrows != nrows || m.ncols != ncols) {
        return Err(Error::InvalidArgument(
            "linear combination of matrices with different shapes".into(),
        ));
    }
    let capacity = terms.iter().map(|(_, m)| m.nnz()).sum();
    let mut builder = TripletBuilder::with_capacity(nrows, ncols, capacity);
    for (scale, m) in terms {
        for (r, c, v) in m.triplets() {
            builder.push(r, c, scale * v);
        }
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let mut b = TripletBuilder::new(2, 3);
        b.push(1, 2, 1.0);
        b.push(0, 1, 2.0);
        b.push(1, 0, 3.0);
        b.push(1, 2, 4.0);
        let m = b.build();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), 5.0);
        assert_eq!(m.get(0, 0), 0.0);
        let row: Vec<_> = m.row(1).collect();
        assert_eq!(row, vec![(0, 3.0), (2, 5.0)]);
        assert_eq!(m.transpose().get(2, 1), 5.0);
    }

    #[test]
    fn identity_block() {
        let mut b = TripletBuilder::new(3, 3);
        for r in 0..3 {
            for c in 0..3 {
                b.push(r, c, (r * 3 + c) as f64 + 1.0);
            }
        }
        let m = b.build().with_identity_block(&[false, true, false], 1.0);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.get(2, 2), 9.0);
    }

    #[test]
    fn combination_and_products() {
        let a = RealSparseMatrix::identity(2, 1.0);
        let b = RealSparseMatrix::from_diagonal(&[2.0, 3.0]);
        let c = linear_combination(&[(Complex64::new(1.0, 0.0), &a), (Complex64::new(0.0, -1.0), &b)])
            .unwrap();
        assert_eq!(c.get(1, 1), Complex64::new(1.0, -3.0));
        let v = [Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0)];
        let q = c.quadratic_form(&v);
        // |v0|^2 (1 - 2i) + |v1|^2 (1 - 3i)
        assert_eq!(q, Complex64::new(6.0, -16.0));
        assert!(linear_combination(&[]).is_err());
    }
}
