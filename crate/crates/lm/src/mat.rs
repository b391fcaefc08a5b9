//! Dense row-major matrices and a thin gemm wrapper.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

pub trait Scalar:
    Float + Default + Debug + Send + Sync + Sum + AddAssign + SubAssign + MulAssign + 'static
{
    /// C = alpha·A·B + beta·C over strided views.
    ///
    /// # Safety
    /// Every index reachable through the dimensions and strides must lie
    /// inside the pointed-to buffers.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn from_f64(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite")
    }
}

impl Scalar for f32 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Scalar for f64 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

/// A strided read-only window: element (i, j) is `data[off + i*rs + j*cs]`.
#[derive(Clone, Copy)]
pub struct View<'a, T> {
    pub data: &'a [T],
    pub off: usize,
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl<'a, T> View<'a, T> {
    pub fn t(self) -> Self {
        View {
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
            ..self
        }
    }

    fn last_index(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return self.off;
        }
        self.off + (self.rows - 1) * self.rs + (self.cols - 1) * self.cs
    }
}

pub struct ViewMut<'a, T> {
    pub data: &'a mut [T],
    pub off: usize,
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

/// C = alpha·A·B + beta·C.
pub fn gemm<T: Scalar>(alpha: T, a: View<T>, b: View<T>, beta: T, c: ViewMut<T>) {
    assert_eq!(a.cols, b.rows, "inner dimensions");
    assert_eq!(a.rows, c.rows, "row count");
    assert_eq!(b.cols, c.cols, "column count");
    if c.rows == 0 || c.cols == 0 {
        return;
    }
    let c_last = c.off + (c.rows - 1) * c.rs + (c.cols - 1) * c.cs;
    assert!(c_last < c.data.len());
    if a.cols == 0 {
        for i in 0..c.rows {
            for j in 0..c.cols {
                let x = &mut c.data[c.off + i * c.rs + j * c.cs];
                *x = if beta == T::zero() { T::zero() } else { *x * beta };
            }
        }
        return;
    }
    assert!(a.last_index() < a.data.len());
    assert!(b.last_index() < b.data.len());
    // SAFETY: all three windows were bounds-checked above.
    unsafe {
        T::gemm_raw(
            a.rows,
            a.cols,
            b.cols,
            alpha,
            a.data.as_ptr().add(a.off),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr().add(b.off),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.data.as_mut_ptr().add(c.off),
            c.rs as isize,
            c.cs as isize,
        );
    }
}

#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T> Debug for Mat<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Mat({}x{})", self.rows, self.cols)
    }
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn view(&self) -> View<'_, T> {
        View {
            data: &self.data,
            off: 0,
            rows: self.rows,
            cols: self.cols,
            rs: self.cols,
            cs: 1,
        }
    }

    /// Columns `c0..c0+width` of every row.
    pub fn cols_view(&self, c0: usize, width: usize) -> View<'_, T> {
        assert!(c0 + width <= self.cols);
        View {
            data: &self.data,
            off: c0,
            rows: self.rows,
            cols: width,
            rs: self.cols,
            cs: 1,
        }
    }

    pub fn view_mut(&mut self) -> ViewMut<'_, T> {
        ViewMut {
            rows: self.rows,
            cols: self.cols,
            rs: self.cols,
            cs: 1,
            off: 0,
            data: &mut self.data,
        }
    }

    pub fn cols_view_mut(&mut self, c0: usize, width: usize) -> ViewMut<'_, T> {
        assert!(c0 + width <= self.cols);
        ViewMut {
            rows: self.rows,
            cols: width,
            rs: self.cols,
            cs: 1,
            off: c0,
            data: &mut self.data,
        }
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|x| *x = T::zero());
    }

    pub fn add_assign(&mut self, other: &Mat<T>) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: T) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// Adds `bias` (length `cols`) to every row.
    pub fn add_row(&mut self, bias: &[T]) {
        assert_eq!(bias.len(), self.cols);
        for r in self.data.chunks_mut(self.cols.max(1)) {
            for (x, &b) in r.iter_mut().zip(bias) {
                *x += b;
            }
        }
    }

    /// Sum over rows, accumulated into `out`.
    pub fn col_sums_into(&self, out: &mut [T]) {
        assert_eq!(out.len(), self.cols);
        for r in self.data.chunks(self.cols.max(1)) {
            for (o, &x) in out.iter_mut().zip(r) {
                *o += x;
            }
        }
    }

    pub fn rows_range(&self, r0: usize, r1: usize) -> Mat<T> {
        Mat::from_vec(r1 - r0, self.cols, self.data[r0 * self.cols..r1 * self.cols].to_vec())
    }

    pub fn vstack(parts: &[&Mat<T>], cols: usize) -> Mat<T> {
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            assert_eq!(p.cols, cols);
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Mat { rows, cols, data }
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|x| x.as_f64() * x.as_f64()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| U::from_f64(x.as_f64())).collect(),
        }
    }
}

/// A·B
pub fn matmul<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let mut c = Mat::zeros(a.rows, b.cols);
    gemm(T::one(), a.view(), b.view(), T::zero(), c.view_mut());
    c
}

/// C += Aᵀ·B
pub fn matmul_tn_acc<T: Scalar>(a: &Mat<T>, b: &Mat<T>, c: &mut Mat<T>) {
    gemm(T::one(), a.view().t(), b.view(), T::one(), c.view_mut());
}

/// A·Bᵀ
pub fn matmul_nt<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let mut c = Mat::zeros(a.rows, b.rows);
    gemm(T::one(), a.view(), b.view().t(), T::zero(), c.view_mut());
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
        Mat::from_fn(a.rows, b.cols, |i, j| (0..a.cols).map(|k| a.at(i, k) * b.at(k, j)).sum())
    }

    #[test]
    fn gemm_variants_match_naive() {
        let a = Mat::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 0.5 - 2.0);
        let b = Mat::from_fn(4, 2, |i, j| (i as f64 - j as f64) * 0.25);
        assert_eq!(matmul(&a, &b), naive(&a, &b));
        let bt = Mat::from_fn(2, 4, |i, j| b.at(j, i));
        assert_eq!(matmul_nt(&a, &bt), naive(&a, &b));
        let at = Mat::from_fn(4, 3, |i, j| a.at(j, i));
        let mut c = Mat::zeros(3, 2);
        matmul_tn_acc(&at, &b, &mut c);
        assert_eq!(c, naive(&a, &b));
    }

    #[test]
    fn strided_column_block() {
        // two heads of width 2 inside a 3x4 matrix
        let q = Mat::from_fn(3, 4, |i, j| (i + 10 * j) as f64);
        let mut out = Mat::<f64>::zeros(3, 3);
        gemm(1.0, q.cols_view(2, 2), q.cols_view(2, 2).t(), 0.0, out.view_mut());
        let head = Mat::from_fn(3, 2, |i, j| q.at(i, j + 2));
        assert_eq!(out, matmul_nt(&head, &head));
    }

    #[test]
    fn empty_inner_dimension_zeroes() {
        let a = Mat::<f32>::zeros(2, 0);
        let b = Mat::<f32>::zeros(0, 3);
        let mut c = Mat::from_vec(2, 3, vec![1.0; 6]);
        gemm(1.0, a.view(), b.view(), 0.0, c.view_mut());
        assert!(c.data.iter().all(|&x| x == 0.0));
    }
}
