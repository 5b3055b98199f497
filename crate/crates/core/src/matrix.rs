//! Dense complex matrices.
//!
//! [`CMatrix`] is the value type every other module works with: a row-major
//! `rows x cols` array of `Complex64`. Zero-sized dimensions are allowed so
//! that block partitions at rank `0` or full rank need no special casing.
//!
//! Fallible methods (`matmul`, `add`, `sub`, ...) return [`Error`] on shape
//! mismatch. The arithmetic operators on references panic instead, in the
//! manner of `ndarray`'s `dot`, and are meant for code that has already
//! validated its shapes.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result, Shape};

pub type C64 = Complex64;

/// Shorthand constructor for a complex scalar.
#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

/// Relative comparison tolerance (dimensionless, nonnegative).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Tolerance(f64);

impl Tolerance {
    /// Panics if `value` is negative or not finite.
    pub fn new(value: f64) -> Self {
        Self::try_new(value).expect("tolerance must be finite and nonnegative")
    }

    pub fn try_new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidArgument(format!(
                "tolerance must be finite and nonnegative, got {value}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Tolerance> for f64 {
    fn from(t: Tolerance) -> f64 {
        t.0
    }
}

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// The four blocks of a 2x2 partition `[[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub a11: CMatrix,
    pub a12: CMatrix,
    pub a21: CMatrix,
    pub a22: CMatrix,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadLength {
                len: data.len(),
                shape: (rows, cols),
            });
        }
        if let Some(pos) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from complex rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Builds a matrix from real rows. Panics on ragged input.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let complex: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&complex)
    }

    /// `rows x cols` matrix with `diag` on the leading diagonal.
    pub fn from_diag(rows: usize, cols: usize, diag: &[C64]) -> Self {
        assert!(diag.len() <= rows.min(cols), "diagonal longer than min(rows, cols)");
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(d.len(), d.len(), &d)
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
    pub fn shape(&self) -> Shape {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major entries.
    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Columns `start..end` as a `rows x (end - start)` matrix.
    pub fn column_range(&self, start: usize, end: usize) -> CMatrix {
        assert!(start <= end && end <= self.cols, "column range out of bounds");
        CMatrix::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }

    /// Rows `start..end` as a `(end - start) x cols` matrix.
    pub fn row_range(&self, start: usize, end: usize) -> CMatrix {
        assert!(start <= end && end <= self.rows, "row range out of bounds");
        CMatrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn conj_transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![C64::new(0.0, 0.0); m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &other.data[p * n..(p + 1) * n];
                for (o, &b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(CMatrix {
            rows: m,
            cols: n,
            data: out,
        })
    }

    fn zip_with(&self, other: &CMatrix, op: &'static str, f: impl Fn(C64, C64) -> C64) -> Result<CMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn scale(&self, c: C64) -> CMatrix {
        self.map(|z| c * z)
    }

    /// `I + self` for a square matrix.
    pub fn plus_identity(&self) -> CMatrix {
        assert!(self.is_square(), "plus_identity needs a square matrix");
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)] += C64::new(1.0, 0.0);
        }
        out
    }

    /// `self^k` for square `self`; `k = 0` gives the identity.
    pub fn pow(&self, k: u32) -> Result<CMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op: "pow",
                shape: self.shape(),
            });
        }
        let mut acc = CMatrix::identity(self.rows);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        // Scaled sum of squares so that huge or tiny entries do not overflow.
        let scale = self
            .data
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0_f64, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let ssq: f64 = self
            .data
            .iter()
            .map(|z| {
                let (a, b) = (z.re / scale, z.im / scale);
                a * a + b * b
            })
            .sum();
        scale * ssq.sqrt()
    }

    /// Frobenius inner product `<self, other> = sum conj(self_ij) * other_ij`.
    pub fn inner(&self, other: &CMatrix) -> Result<C64> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op: "inner",
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    /// `||self - other||_F / max(1, ||self||_F, ||other||_F)`.
    pub fn rel_distance(&self, other: &CMatrix) -> Result<f64> {
        let diff = self.sub(other)?.frobenius_norm();
        Ok(diff / 1f64.max(self.frobenius_norm()).max(other.frobenius_norm()))
    }

    pub fn approx_eq(&self, other: &CMatrix, tol: Tolerance) -> Result<bool> {
        Ok(self.rel_distance(other)? <= tol.value())
    }

    /// `||A A* - A* A||_F`.
    pub fn normality_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op: "is_normal",
                shape: self.shape(),
            });
        }
        let ah = self.conj_transpose();
        Ok((&(self * &ah) - &(&ah * self)).frobenius_norm())
    }

    pub fn is_normal(&self, tol: Tolerance) -> Result<bool> {
        let defect = self.normality_defect()?;
        let norm = self.frobenius_norm();
        Ok(defect <= tol.value() * 1f64.max(norm * norm))
    }

    /// `||A - A*||_F`.
    pub fn hermitian_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op: "hermitian_defect",
                shape: self.shape(),
            });
        }
        Ok((self - &self.conj_transpose()).frobenius_norm())
    }

    /// Splits into `[[a11, a12], [a21, a22]]` with `a11` of shape
    /// `row_cut x col_cut`. Empty blocks are allowed.
    pub fn block_split(&self, row_cut: usize, col_cut: usize) -> Result<Blocks> {
        if row_cut > self.rows || col_cut > self.cols {
            return Err(Error::CutOutOfRange {
                row_cut,
                col_cut,
                shape: self.shape(),
            });
        }
        let sub = |r0: usize, r1: usize, c0: usize, c1: usize| {
            CMatrix::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
        };
        let (m, n) = self.shape();
        Ok(Blocks {
            a11: sub(0, row_cut, 0, col_cut),
            a12: sub(0, row_cut, col_cut, n),
            a21: sub(row_cut, m, 0, col_cut),
            a22: sub(row_cut, m, col_cut, n),
        })
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hstack(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                op: "hstack",
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(CMatrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        }))
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                op: "vstack",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(CMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }
}

impl Blocks {
    /// Reassembles `[[a11, a12], [a21, a22]]`.
    pub fn assemble(&self) -> Result<CMatrix> {
        let top_rows = self.a11.rows;
        let bottom_rows = self.a21.rows;
        let left_cols = self.a11.cols;
        let right_cols = self.a12.cols;
        let conformal = self.a12.rows == top_rows
            && self.a22.rows == bottom_rows
            && self.a21.cols == left_cols
            && self.a22.cols == right_cols;
        if !conformal {
            return Err(Error::NonConformal(format!(
                "a11 {:?}, a12 {:?}, a21 {:?}, a22 {:?}",
                self.a11.shape(),
                self.a12.shape(),
                self.a21.shape(),
                self.a22.shape()
            )));
        }
        let (m, n) = (top_rows + bottom_rows, left_cols + right_cols);
        Ok(CMatrix::from_fn(m, n, |i, j| match (i < top_rows, j < left_cols) {
            (true, true) => self.a11[(i, j)],
            (true, false) => self.a12[(i, j - left_cols)],
            (false, true) => self.a21[(i - top_rows, j)],
            (false, false) => self.a22[(i - top_rows, j - left_cols)],
        }))
    }
}

/// Free-function form of [`Blocks::assemble`].
pub fn block_assemble(a11: CMatrix, a12: CMatrix, a21: CMatrix, a22: CMatrix) -> Result<CMatrix> {
    Blocks { a11, a12, a21, a22 }.assemble()
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds for {:?}", self.shape());
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds for {:?}", self.shape());
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix::add(self, rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix::sub(self, rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;

    fn neg(self) -> CMatrix {
        self.map(|z| -z)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
