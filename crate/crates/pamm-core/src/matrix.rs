use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix. Dimensions are fixed at construction and every
/// operation validates its partner's shape; data length always equals
/// `rows * cols` and both dimensions are at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Argument(alloc::format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Argument(alloc::format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| U::from_f64(Scalar::to_f64(v))).collect(),
        }
    }

    /// `self · other`, row-major `(r x c) · (c x m) -> (r x m)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape {
                context: "mul",
                expected: (self.cols, other.cols),
                got: (other.rows, other.cols),
            });
        }
        let (r, c, m) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(r, m);
        for i in 0..r {
            let arow = self.row(i);
            let orow = out.row_mut(i);
            for (t, &a_it) in arow.iter().enumerate().take(c) {
                let brow = &other.data[t * m..(t + 1) * m];
                for j in 0..m {
                    orow[j] += a_it * brow[j];
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`, `(b x n)ᵀ · (b x m) -> (n x m)`.
    pub fn tr_mul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Shape {
                context: "tr_mul",
                expected: (self.rows, other.cols),
                got: (other.rows, other.cols),
            });
        }
        let (b, n, m) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(n, m);
        for t in 0..b {
            let arow = self.row(t);
            let brow = other.row(t);
            for i in 0..n {
                let a_ti = arow[i];
                let orow = &mut out.data[i * m..(i + 1) * m];
                for j in 0..m {
                    orow[j] += a_ti * brow[j];
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`, `(r x c) · (m x c)ᵀ -> (r x m)`.
    pub fn mul_tr(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Shape {
                context: "mul_tr",
                expected: (other.rows, self.cols),
                got: (other.rows, other.cols),
            });
        }
        let (r, c, m) = (self.rows, self.cols, other.rows);
        let mut out = Self::zeros(r, m);
        for i in 0..r {
            let arow = self.row(i);
            for j in 0..m {
                let brow = other.row(j);
                let mut acc = T::zero();
                for t in 0..c {
                    acc += arow[t] * brow[t];
                }
                out.data[i * m + j] = acc;
            }
        }
        Ok(out)
    }

    /// Naive triple-loop `selfᵀ · other` with 64-bit accumulation, the
    /// baseline every faster path is compared against in tests.
    pub fn tr_mul_oracle(&self, other: &Self) -> Result<DenseMatrix<f64>> {
        if self.rows != other.rows {
            return Err(Error::Shape {
                context: "tr_mul_oracle",
                expected: (self.rows, other.cols),
                got: (other.rows, other.cols),
            });
        }
        let (b, n, m) = (self.rows, self.cols, other.cols);
        let mut out = DenseMatrix::<f64>::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                let mut acc = 0.0f64;
                for t in 0..b {
                    acc += self.at(t, i).to_f64() * other.at(t, j).to_f64();
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Euclidean norm of each row.
    pub fn row_norms(&self) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for &v in self.row(i) {
                    acc += v * v;
                }
                acc.sqrt()
            })
            .collect()
    }

    /// Euclidean norm of all entries.
    pub fn frobenius_norm(&self) -> T {
        let mut acc = T::zero();
        for &v in &self.data {
            acc += v * v;
        }
        acc.sqrt()
    }

    /// Frobenius norm accumulated in 64-bit regardless of `T`.
    pub fn frobenius_norm_f64(&self) -> f64 {
        let mut acc = 0.0f64;
        for &v in &self.data {
            let x = v.to_f64();
            acc += x * x;
        }
        num_traits::Float::sqrt(acc)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape { context: "add", expected: self.shape(), got: other.shape() });
        }
        let mut out = self.clone();
        for (o, &v) in out.data.iter_mut().zip(other.data.iter()) {
            *o += v;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape { context: "sub", expected: self.shape(), got: other.shape() });
        }
        let mut out = self.clone();
        for (o, &v) in out.data.iter_mut().zip(other.data.iter()) {
            *o -= v;
        }
        Ok(out)
    }

    pub fn scale_in_place(&mut self, s: T) {
        for v in &mut self.data {
            *v = *v * s;
        }
    }

    /// `self += s * other`; shapes must match.
    pub fn add_scaled(&mut self, other: &Self, s: T) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape {
                context: "add_scaled",
                expected: self.shape(),
                got: other.shape(),
            });
        }
        for (o, &v) in self.data.iter_mut().zip(other.data.iter()) {
            *o += s * v;
        }
        Ok(())
    }
}

/// Cosine similarities between the rows of `a` and the rows of `c`:
/// entry `(i, j) = ⟨a_i, c_j⟩ / (‖a_i‖ ‖c_j‖)`. A row or generator whose
/// norm is at most `norm_guard` has no direction, so its entries are 0.
pub fn cosine_similarity_matrix<T: Scalar>(
    a: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
    norm_guard: T,
) -> Result<DenseMatrix<T>> {
    if a.cols() != c.cols() {
        return Err(Error::Shape {
            context: "cosine_similarity_matrix",
            expected: (c.rows(), a.cols()),
            got: c.shape(),
        });
    }
    let a_norms = a.row_norms();
    let c_norms = c.row_norms();
    let mut out = DenseMatrix::zeros(a.rows(), c.rows());
    for i in 0..a.rows() {
        if a_norms[i] <= norm_guard {
            continue;
        }
        let arow = a.row(i);
        for j in 0..c.rows() {
            if c_norms[j] <= norm_guard {
                continue;
            }
            let crow = c.row(j);
            let mut dot = T::zero();
            for t in 0..a.cols() {
                dot += arow[t] * crow[t];
            }
            out.set(i, j, dot / (a_norms[i] * c_norms[j]));
        }
    }
    Ok(out)
}
