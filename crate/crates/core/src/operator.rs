//! Compressed sparse row storage for complex operators.
//!
//! Full-space operators on `2^N` states and parity blocks are both held in
//! this form; dense copies are only materialized by the dense eigensolver and
//! by oracles in tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A (possibly rectangular) complex matrix in CSR layout.
///
/// Column indices within each row are strictly increasing and no explicit
/// zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Assembles a matrix from `(row, col, value)` triplets. Duplicate
    /// positions are summed; entries that sum to exactly zero are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, C64)>,
        hermitian: bool,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut row_of: Vec<usize> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < rows && c < cols);
            if let (Some(&lr), Some(&lc)) = (row_of.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            row_of.push(r);
            col_idx.push(c);
            values.push(v);
        }
        // drop exact cancellations
        let mut keep_r = Vec::with_capacity(row_of.len());
        let mut keep_c = Vec::with_capacity(row_of.len());
        let mut keep_v = Vec::with_capacity(row_of.len());
        for ((r, c), v) in row_of.into_iter().zip(col_idx).zip(values) {
            if v != C64::new(0.0, 0.0) {
                keep_r.push(r);
                keep_c.push(c);
                keep_v.push(v);
            }
        }
        for &r in &keep_r {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx: keep_c,
            values: keep_v,
            hermitian,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| (i, i, C64::new(d, 0.0)))
            .collect();
        Self::from_triplets(diag.len(), diag.len(), triplets, true)
    }

    pub fn from_dense(m: &DMatrix<C64>, hermitian: bool) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), triplets, hermitian)
    }

    /// Square dimension. For rectangular blocks this is the row count.
    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn hermitian_flag(&self) -> bool {
        self.hermitian
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over the stored entries of one row as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Iterates over all stored entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(p) => self.values[span.start + p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// True when every stored entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// `max |A - A^\dagger|` over all elements.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.entries()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let triplets = self.entries().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.cols, self.rows, triplets, self.hermitian)
    }

    /// `y = A x`.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            *yi = acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.rows];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_vector(&self, x: &DVector<C64>) -> Result<DVector<C64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok(DVector::from_vec(self.apply(x.as_slice())))
    }

    /// `<u| A |v>`.
    pub fn matrix_element(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (i, ui) in u.iter().enumerate() {
            let mut row = C64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[p] * v[self.col_idx[p]];
            }
            acc += ui.conj() * row;
        }
        acc
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    /// Real part as a dense matrix; only meaningful when [`Self::is_real`].
    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v.re;
        }
        m
    }

    /// Keeps the rows `row_sel` and columns `col_sel` (both given as full
    /// indices in the new order). Returns the sub-block and the largest
    /// magnitude among entries of the selected rows that fall outside
    /// `col_sel`.
    pub(crate) fn slice(&self, row_sel: &[usize], col_sel: &[usize], hermitian: bool) -> (Self, f64) {
        let mut col_map = vec![usize::MAX; self.cols];
        for (local, &full) in col_sel.iter().enumerate() {
            col_map[full] = local;
        }
        let mut triplets = Vec::new();
        let mut discarded = 0.0f64;
        for (local_row, &full_row) in row_sel.iter().enumerate() {
            for (c, v) in self.row(full_row) {
                match col_map[c] {
                    usize::MAX => discarded = discarded.max(v.norm()),
                    lc => triplets.push((local_row, lc, v)),
                }
            }
        }
        (
            Self::from_triplets(row_sel.len(), col_sel.len(), triplets, hermitian),
            discarded,
        )
    }
}

impl std::ops::Mul for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.cols, rhs.rows, "incompatible operator shapes");
        let mut triplets = Vec::new();
        for i in 0..self.rows {
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    triplets.push((i, j, a * b));
                }
            }
        }
        OperatorMatrix::from_triplets(self.rows, rhs.cols, triplets, false)
    }
}

impl std::ops::Add for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let triplets = self.entries().chain(rhs.entries()).collect();
        OperatorMatrix::from_triplets(self.rows, self.cols, triplets, self.hermitian && rhs.hermitian)
    }
}

impl std::ops::Sub for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let triplets = self
            .entries()
            .chain(rhs.entries().map(|(i, j, v)| (i, j, -v)))
            .collect();
        OperatorMatrix::from_triplets(self.rows, self.cols, triplets, self.hermitian && rhs.hermitian)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn duplicates_are_summed_and_cancellations_dropped() {
        let m = OperatorMatrix::from_triplets(
            2,
            2,
            vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (1, 0, c(1.0)), (1, 0, c(-1.0))],
            false,
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0));
        assert_eq!(m.get(1, 0), c(0.0));
    }

    #[test]
    fn apply_matches_dense() {
        let m = OperatorMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, c(1.0)), (2, 1, C64::new(0.0, 2.0)), (1, 0, c(-1.5))],
            false,
        );
        let x = [c(1.0), C64::new(1.0, 1.0)];
        let y = m.apply(&x);
        let dense = m.to_dense() * DVector::from_row_slice(&x);
        for (a, b) in y.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn adjoint_of_hermitian_is_itself() {
        let m = OperatorMatrix::from_triplets(
            2,
            2,
            vec![(0, 1, C64::new(1.0, 2.0)), (1, 0, C64::new(1.0, -2.0)), (1, 1, c(3.0))],
            true,
        );
        assert_eq!(m.hermitian_defect(), 0.0);
        assert_eq!(m.adjoint(), m);
    }

    #[test]
    fn slicing_reports_discarded_entries() {
        let m = OperatorMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, c(1.0)), (0, 2, c(0.5)), (2, 2, c(2.0))],
            true,
        );
        let (block, off) = m.slice(&[0, 1], &[0, 1], true);
        assert_eq!(block.dim(), 2);
        assert_eq!(block.get(0, 0), c(1.0));
        assert_eq!(off, 0.5);
    }
}
