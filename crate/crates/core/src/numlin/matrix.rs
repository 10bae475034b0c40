use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix.
///
/// Storage is delegated to `nalgebra`; the public surface (constructors,
/// `to_row_major`, serialization helpers in callers) is row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, &data),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            inner: DMatrix::from_fn(rows, cols, f),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(
            n,
            n,
            |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO },
        )
    }

    /// Column vector with the given entries.
    pub fn column(entries: &[C64]) -> Self {
        Self {
            inner: DMatrix::from_column_slice(entries.len(), 1, entries),
        }
    }

    /// Rank-one operator |u⟩⟨v|.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn from_nalgebra(inner: DMatrix<C64>) -> Self {
        Self { inner }
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn into_nalgebra(self) -> DMatrix<C64> {
        self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    /// Entries of a single-column matrix.
    pub fn column_entries(&self, col: usize) -> Vec<C64> {
        self.inner.column(col).iter().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.inner
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            inner: self.inner.transpose(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            inner: self.inner.map(|z| z.conj()),
        }
    }

    pub fn trace(&self) -> C64 {
        let n = self.rows().min(self.cols());
        (0..n).map(|i| self.inner[(i, i)]).sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            inner: self.inner.map(|z| z * c),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self {
            inner: self.inner.map(|z| z * c),
        }
    }

    /// Kronecker product `self ⊗ other`, first factor slowest-varying.
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        Self {
            inner: self.inner.kronecker(&other.inner),
        }
    }

    /// Hilbert-Schmidt inner product Tr A†B.
    pub fn hs_inner(&self, other: &ComplexMatrix) -> C64 {
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.inner.shape(), other.inner.shape());
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols(), v.len());
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.inner[(i, j)] * v[j]).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.inner[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.inner[idx]
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

impl<'a> Add<&'a ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: self.inner + rhs.inner,
        }
    }
}

impl<'a> AddAssign<&'a ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &'a ComplexMatrix) {
        self.inner += &rhs.inner;
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: self.inner - rhs.inner,
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix {
            inner: -&self.inner,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_round_trip() {
        let data: Vec<C64> = (0..6).map(|k| C64::new(k as f64, -(k as f64))).collect();
        let m = ComplexMatrix::from_row_major(2, 3, data.clone()).unwrap();
        assert_eq!(m[(0, 2)], C64::new(2.0, -2.0));
        assert_eq!(m[(1, 0)], C64::new(3.0, -3.0));
        assert_eq!(m.to_row_major(), data);
    }

    #[test]
    fn rejects_non_finite_and_bad_lengths() {
        let bad = vec![C64::new(f64::NAN, 0.0)];
        assert_eq!(
            ComplexMatrix::from_row_major(1, 1, bad),
            Err(Error::NonFiniteInput)
        );
        assert!(matches!(
            ComplexMatrix::from_row_major(2, 2, vec![ONE; 3]),
            Err(Error::LengthMismatch {
                expected: 4,
                got: 3
            })
        ));
    }

    #[test]
    fn kron_orders_first_factor_slowest() {
        let a = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        let b = ComplexMatrix::from_real_diagonal(&[1.0, 10.0]);
        let k = a.kron(&b);
        let diag: Vec<f64> = (0..4).map(|i| k[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 10.0, 2.0, 20.0]);
    }
}
