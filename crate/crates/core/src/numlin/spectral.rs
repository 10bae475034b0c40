use nalgebra::{DMatrix, SymmetricEigen, SVD};

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

const SOLVER_MAX_ITERS: usize = 10_000;

/// Self-adjoint operator, stored as the Hermitian part of its input.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + &m.adjoint()).scale_real(0.5)
}

impl HermitianOperator {
    /// Validating constructor: rejects non-square, non-finite or visibly
    /// non-Hermitian input, then stores `(A + A†)/2`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        let deviation = operator_norm(&(&matrix - &matrix.adjoint()))?;
        let tol = 1e-10 * operator_norm(&matrix)?.max(1.0);
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            matrix: hermitian_part(&matrix),
        })
    }

    /// Hermitizes without checking. For values that are Hermitian by
    /// construction up to rounding.
    pub fn from_hermitian_part(matrix: &ComplexMatrix) -> Self {
        assert!(matrix.is_square(), "Hermitian part of a non-square matrix");
        Self {
            matrix: hermitian_part(matrix),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self {
            matrix: ComplexMatrix::from_real_diagonal(diag),
        }
    }

    /// |v⟩⟨v| (not normalized).
    pub fn ket_bra(v: &[C64]) -> Self {
        Self::from_hermitian_part(&ComplexMatrix::outer(v, v))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eig(&self) -> Result<SpectralDecomposition> {
        hermitian_eig(self)
    }

    pub fn pseudo_power(&self, s: f64) -> Result<Self> {
        pseudo_power(self, s)
    }

    pub fn positive_projection(&self) -> Result<Self> {
        positive_projection(self)
    }

    /// Square root on the positive part.
    pub fn sqrt(&self) -> Result<Self> {
        pseudo_power(self, 0.5)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.eigenvalues[0])
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eig()?.eigenvalues.last().unwrap())
    }

    /// Numerical rank cutoff `dim·ε·max(|λ|_max, 1)`.
    pub fn rank_cutoff(&self) -> Result<f64> {
        Ok(self.eig()?.rank_cutoff())
    }

    /// Err(NotPsd) when the smallest eigenvalue is below `-tol`.
    pub fn check_psd(&self, tol: f64) -> Result<()> {
        let min_eigenvalue = self.min_eigenvalue()?;
        if min_eigenvalue < -tol {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        Ok(())
    }

    /// PSD check with the library-wide tolerance.
    pub fn check_psd_default(&self) -> Result<()> {
        let dec = self.eig()?;
        let tol = psd_tolerance(&dec);
        let min_eigenvalue = dec.eigenvalues[0];
        if min_eigenvalue < -tol {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix - &other.matrix,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            matrix: self.matrix.scale_real(c),
        }
    }

    /// Real expectation-style product Tr(self · other).
    pub fn trace_product(&self, other: &Self) -> f64 {
        self.matrix.hs_inner(&other.matrix).re
    }

    /// `X · self · X†`.
    pub fn congruence(&self, x: &ComplexMatrix) -> Self {
        Self::from_hermitian_part(&(&(x * &self.matrix) * &x.adjoint()))
    }
}

/// Tolerance used when validating positivity of inputs: the rank cutoff,
/// widened to `1e-12·max(1, ‖A‖)` so round-off in caller data is accepted.
pub fn psd_tolerance(dec: &SpectralDecomposition) -> f64 {
    dec.rank_cutoff()
        .max(1e-12 * dec.max_abs_eigenvalue().max(1.0))
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    pub fn rank_cutoff(&self) -> f64 {
        self.dim() as f64 * f64::EPSILON * self.max_abs_eigenvalue().max(1.0)
    }

    /// Σ f(λ_j) Π_j over all eigenvalues.
    pub fn map_eigenvalues(&self, mut f: impl FnMut(f64) -> f64) -> HermitianOperator {
        let n = self.dim();
        let v = self.eigenvectors.as_nalgebra();
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut scaled = v.clone();
        for (j, w) in weights.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*w);
        }
        let out = &scaled * v.adjoint();
        debug_assert_eq!(out.nrows(), n);
        HermitianOperator::from_hermitian_part(&ComplexMatrix::from_nalgebra(out))
    }

    /// Σ_{λ_j > cutoff} f(λ_j) Π_j.
    pub fn map_positive(&self, mut f: impl FnMut(f64) -> f64) -> HermitianOperator {
        let cutoff = self.rank_cutoff();
        self.map_eigenvalues(|l| if l > cutoff { f(l) } else { 0.0 })
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.map_eigenvalues(|l| l)
    }

    pub fn eigenvector(&self, j: usize) -> Vec<C64> {
        self.eigenvectors.column_entries(j)
    }
}

pub fn hermitian_eig(a: &HermitianOperator) -> Result<SpectralDecomposition> {
    if !a.matrix.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let m: DMatrix<C64> = a.matrix.as_nalgebra().clone();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, SOLVER_MAX_ITERS)
        .ok_or(Error::ConvergenceFailure)?;
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// A^{s} on the eigenspace with λ above the rank cutoff, zero elsewhere.
pub fn pseudo_power(a: &HermitianOperator, s: f64) -> Result<HermitianOperator> {
    if !s.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let dec = hermitian_eig(a)?;
    if s == 0.0 {
        return Ok(dec.map_positive(|_| 1.0));
    }
    Ok(dec.map_positive(|l| l.powf(s)))
}

pub fn positive_projection(a: &HermitianOperator) -> Result<HermitianOperator> {
    pseudo_power(a, 0.0)
}

pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if !a.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let svd = SVD::try_new(
        a.as_nalgebra().clone(),
        false,
        false,
        f64::EPSILON,
        SOLVER_MAX_ITERS,
    )
    .ok_or(Error::ConvergenceFailure)?;
    Ok(svd.singular_values.iter().copied().collect())
}

pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().fold(0.0, |m, &s| m.max(s)))
}
