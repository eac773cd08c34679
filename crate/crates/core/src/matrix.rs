//! Column-major dense matrix storage.
//!
//! [`DenseMatrix`] owns its elements; [`MatView`]/[`MatViewMut`] borrow a
//! contiguous range of whole columns, which is the only windowing the
//! solver needs (active-column blocks of the iteration buffers).

use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> std::fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.rows, self.cols)
    }
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = T::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from column-major data; `data.len()` must equal `rows * cols`.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "column-major length mismatch");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn data(&self) -> &[T] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Immutable view of columns `lo..hi`.
    pub fn cols_view(&self, lo: usize, hi: usize) -> MatView<'_, T> {
        assert!(lo <= hi && hi <= self.cols);
        MatView {
            rows: self.rows,
            cols: hi - lo,
            data: &self.data[lo * self.rows..hi * self.rows],
        }
    }

    /// Mutable view of columns `lo..hi`.
    pub fn cols_view_mut(&mut self, lo: usize, hi: usize) -> MatViewMut<'_, T> {
        assert!(lo <= hi && hi <= self.cols);
        let rows = self.rows;
        MatViewMut {
            rows,
            cols: hi - lo,
            data: &mut self.data[lo * rows..hi * rows],
        }
    }

    pub fn view(&self) -> MatView<'_, T> {
        self.cols_view(0, self.cols)
    }

    pub fn view_mut(&mut self) -> MatViewMut<'_, T> {
        self.cols_view_mut(0, self.cols)
    }

    /// Copies columns `src_lo..src_lo+n` of `src` into columns starting at
    /// `dst_lo`. Row counts must match.
    pub fn copy_cols_from(&mut self, dst_lo: usize, src: &DenseMatrix<T>, src_lo: usize, n: usize) {
        assert_eq!(self.rows, src.rows, "row count mismatch");
        let rows = self.rows;
        self.data[dst_lo * rows..(dst_lo + n) * rows]
            .copy_from_slice(&src.data[src_lo * rows..(src_lo + n) * rows]);
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let rows = self.rows;
        let (lo, hi) = (a.min(b), a.max(b));
        let (left, right) = self.data.split_at_mut(hi * rows);
        left[lo * rows..(lo + 1) * rows].swap_with_slice(&mut right[..rows]);
    }

    /// Reorders columns `lo..lo+perm.len()` so that new column `k` is old
    /// column `lo + perm[k]`.
    pub fn permute_cols(&mut self, lo: usize, perm: &[usize]) {
        let width = perm.len();
        let rows = self.rows;
        let mut scratch = vec![T::ZERO; width * rows];
        for (k, &p) in perm.iter().enumerate() {
            scratch[k * rows..(k + 1) * rows].copy_from_slice(self.col(lo + p));
        }
        self.data[lo * rows..(lo + width) * rows].copy_from_slice(&scratch);
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }
}

/// Borrowed contiguous column-major block.
#[derive(Clone, Copy)]
pub struct MatView<'a, T> {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) data: &'a [T],
}

impl<'a, T: Scalar> MatView<'a, T> {
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn data(&self) -> &[T] {
        self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn from_slice(rows: usize, cols: usize, data: &'a [T]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn to_owned(&self) -> DenseMatrix<T> {
        DenseMatrix::from_col_major(self.rows, self.cols, self.data.to_vec())
    }
}

/// Mutable counterpart of [`MatView`].
pub struct MatViewMut<'a, T> {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) data: &'a mut [T],
}

impl<'a, T: Scalar> MatViewMut<'a, T> {
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn data(&self) -> &[T] {
        self.data
    }
    pub fn data_mut(&mut self) -> &mut [T] {
        self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn from_slice(rows: usize, cols: usize, data: &'a mut [T]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn as_view(&self) -> MatView<'_, T> {
        MatView {
            rows: self.rows,
            cols: self.cols,
            data: self.data,
        }
    }

    /// Reborrows a mutable sub-range of columns.
    pub fn cols_mut(&mut self, lo: usize, hi: usize) -> MatViewMut<'_, T> {
        assert!(lo <= hi && hi <= self.cols);
        let rows = self.rows;
        MatViewMut {
            rows,
            cols: hi - lo,
            data: &mut self.data[lo * rows..hi * rows],
        }
    }
}
