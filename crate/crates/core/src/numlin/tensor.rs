use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Subsystem dimensions of a tensor-product space. Factor 0 is the
/// slowest-varying index in the flattened basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorFactorization {
    dims: Vec<usize>,
}

impl TensorFactorization {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!(
                "factor dimensions must be positive, got {dims:?}"
            )));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    /// Flat-index offsets of every basis state of the listed factors,
    /// enumerated row-major over those factors.
    fn offsets(&self, factors: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(out.len() * self.dims[f]);
            for &base in &out {
                for d in 0..self.dims[f] {
                    next.push(base + d * strides[f]);
                }
            }
            out = next;
        }
        out
    }

    fn check_square(&self, a: &ComplexMatrix) -> Result<()> {
        if !a.is_square() || a.rows() != self.total() {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{} but factorization {:?} has total {}",
                a.rows(),
                a.cols(),
                self.dims,
                self.total()
            )));
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "factor index {i} out of range for {} factors",
                self.dims.len()
            )));
        }
        Ok(())
    }
}

/// Traces out every factor not in `keep`. Kept factors stay in ascending order.
pub fn partial_trace(
    a: &ComplexMatrix,
    factors: &TensorFactorization,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    factors.check_square(a)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    for &k in &kept {
        factors.check_index(k)?;
    }
    let traced: Vec<usize> = (0..factors.len()).filter(|i| !kept.contains(i)).collect();
    let ko = factors.offsets(&kept);
    let to = factors.offsets(&traced);
    let n = ko.len();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        to.iter().map(|&t| a[(ko[r] + t, ko[c] + t)]).sum()
    }))
}

/// Transpose on a single tensor factor.
pub fn partial_transpose(
    a: &ComplexMatrix,
    factors: &TensorFactorization,
    which: usize,
) -> Result<ComplexMatrix> {
    factors.check_square(a)?;
    factors.check_index(which)?;
    let stride = factors.strides()[which];
    let d = factors.dims[which];
    let n = a.rows();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        let iw = (i / stride) % d;
        let jw = (j / stride) % d;
        a[(i - iw * stride + jw * stride, j - jw * stride + iw * stride)]
    }))
}

/// Flat index map for reordering factors: entry `n` of the result is
/// entry `map[n]` of the input, with result factor `i` = input factor `perm[i]`.
fn permutation_map(factors: &TensorFactorization, perm: &[usize]) -> Result<Vec<usize>> {
    let mut sorted = perm.to_vec();
    sorted.sort_unstable();
    if sorted != (0..factors.len()).collect::<Vec<_>>() {
        return Err(Error::DimensionMismatch(format!(
            "{perm:?} is not a permutation of {} factors",
            factors.len()
        )));
    }
    Ok(factors.offsets(perm))
}

pub fn permute_factors(
    a: &ComplexMatrix,
    factors: &TensorFactorization,
    perm: &[usize],
) -> Result<ComplexMatrix> {
    factors.check_square(a)?;
    let map = permutation_map(factors, perm)?;
    let n = map.len();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| a[(map[i], map[j])]))
}

pub fn permute_vector(
    v: &[C64],
    factors: &TensorFactorization,
    perm: &[usize],
) -> Result<Vec<C64>> {
    if v.len() != factors.total() {
        return Err(Error::LengthMismatch {
            expected: factors.total(),
            got: v.len(),
        });
    }
    let map = permutation_map(factors, perm)?;
    Ok(map.iter().map(|&i| v[i]).collect())
}

/// |A⟩⟩ with entry `i·cols + j` equal to `A[i,j]`, as a column.
pub fn double_ket(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::column(&a.to_row_major())
}

/// Inverse of [`double_ket`].
pub fn from_double_ket(v: &[C64], rows: usize, cols: usize) -> Result<ComplexMatrix> {
    ComplexMatrix::from_row_major(rows, cols, v.to_vec())
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::matrix::{ONE, ZERO};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn mat(n: usize, m: usize, parts: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, m, |i, j| {
            c(parts[2 * (i * m + j)], parts[2 * (i * m + j) + 1])
        })
    }

    fn max_entangled(d: usize) -> Vec<C64> {
        double_ket(&ComplexMatrix::identity(d))
            .column_entries(0)
            .into_iter()
            .map(|z| z / (d as f64).sqrt())
            .collect()
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let phi = max_entangled(2);
        let rho = ComplexMatrix::outer(&phi, &phi);
        let f = TensorFactorization::new(vec![2, 2]).unwrap();
        for keep in [0, 1] {
            let r = partial_trace(&rho, &f, &[keep]).unwrap();
            assert!(r.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        }
    }

    #[test]
    fn partial_transpose_of_bell_state_is_half_swap() {
        let phi = max_entangled(2);
        let rho = ComplexMatrix::outer(&phi, &phi);
        let f = TensorFactorization::new(vec![2, 2]).unwrap();
        let pt = partial_transpose(&rho, &f, 0).unwrap();
        // SWAP|ab⟩ = |ba⟩, written out index by index
        let swap = ComplexMatrix::from_fn(4, 4, |i, j| {
            let (a, b) = (j / 2, j % 2);
            if i == b * 2 + a {
                ONE
            } else {
                ZERO
            }
        });
        assert!(pt.max_abs_diff(&swap.scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn double_ket_of_identity_is_max_entangled() {
        let v = double_ket(&ComplexMatrix::identity(2)).scale_real(1.0 / 2f64.sqrt());
        let e = v.column_entries(0);
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(e.len(), 4);
        assert!((e[0] - c(h, 0.0)).norm() < 1e-15);
        assert!(e[1].norm() == 0.0 && e[2].norm() == 0.0);
        assert!((e[3] - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bad_factorizations_are_rejected() {
        assert!(TensorFactorization::new(vec![2, 0]).is_err());
        let f = TensorFactorization::new(vec![2, 3]).unwrap();
        let a = ComplexMatrix::identity(5);
        assert!(matches!(
            partial_trace(&a, &f, &[0]),
            Err(Error::DimensionMismatch(_))
        ));
        let b = ComplexMatrix::identity(6);
        assert!(partial_transpose(&b, &f, 2).is_err());
        assert!(permute_factors(&b, &f, &[0, 0]).is_err());
    }

    proptest! {
        #[test]
        fn partial_trace_of_products(pa in prop::collection::vec(-1.0f64..1.0, 8), pb in prop::collection::vec(-1.0f64..1.0, 18)) {
            let a = mat(2, 2, &pa);
            let b = mat(3, 3, &pb);
            let f = TensorFactorization::new(vec![2, 3]).unwrap();
            let ab = a.kron(&b);
            let ta = partial_trace(&ab, &f, &[0]).unwrap();
            let tb = partial_trace(&ab, &f, &[1]).unwrap();
            prop_assert!(ta.max_abs_diff(&a.scale(b.trace())) < 1e-13);
            prop_assert!(tb.max_abs_diff(&b.scale(a.trace())) < 1e-13);
            let full = partial_trace(&ab, &f, &[]).unwrap();
            prop_assert!((full[(0, 0)] - ab.trace()).norm() < 1e-13);
        }

        #[test]
        fn partial_trace_preserves_trace(p in prop::collection::vec(-1.0f64..1.0, 2 * 144)) {
            let g = mat(12, 12, &p);
            let rho = &g * &g.adjoint();
            let f = TensorFactorization::new(vec![2, 3, 2]).unwrap();
            let t = rho.trace().re;
            for keep in [vec![0], vec![1], vec![2], vec![0, 2], vec![1, 2]] {
                let r = partial_trace(&rho, &f, &keep).unwrap();
                prop_assert!((r.trace().re - t).abs() <= 1e-13 * t.max(1.0));
            }
        }

        #[test]
        fn partial_transpose_is_involution(p in prop::collection::vec(-1.0f64..1.0, 72)) {
            let x = mat(6, 6, &p);
            let f = TensorFactorization::new(vec![3, 2]).unwrap();
            for w in 0..2 {
                let back = partial_transpose(&partial_transpose(&x, &f, w).unwrap(), &f, w).unwrap();
                prop_assert_eq!(&back, &x);
            }
        }

        #[test]
        fn partial_transpose_of_product(pa in prop::collection::vec(-1.0f64..1.0, 8), pb in prop::collection::vec(-1.0f64..1.0, 18)) {
            let a = mat(2, 2, &pa);
            let b = mat(3, 3, &pb);
            let f = TensorFactorization::new(vec![2, 3]).unwrap();
            let pt = partial_transpose(&a.kron(&b), &f, 0).unwrap();
            prop_assert!(pt.max_abs_diff(&a.transpose().kron(&b)) < 1e-15);
            let pt1 = partial_transpose(&a.kron(&b), &f, 1).unwrap();
            prop_assert!(pt1.max_abs_diff(&a.kron(&b.transpose())) < 1e-15);
        }

        #[test]
        fn double_ket_is_isometry(pa in prop::collection::vec(-1.0f64..1.0, 12), pb in prop::collection::vec(-1.0f64..1.0, 12)) {
            let a = mat(2, 3, &pa);
            let b = mat(2, 3, &pb);
            let va = double_ket(&a);
            let vb = double_ket(&b);
            let lhs = va.hs_inner(&vb);
            let rhs = (&a.adjoint() * &b).trace();
            prop_assert!((lhs - rhs).norm() < 1e-12);
            prop_assert!((va.hs_inner(&va).re - a.frobenius_norm().powi(2)).abs() < 1e-12);
            let back = from_double_ket(&va.column_entries(0), 2, 3).unwrap();
            prop_assert_eq!(back, a);
        }

        #[test]
        fn double_ket_intertwines_products(pa in prop::collection::vec(-1.0f64..1.0, 8), pb in prop::collection::vec(-1.0f64..1.0, 8), pc in prop::collection::vec(-1.0f64..1.0, 8)) {
            let a = mat(2, 2, &pa);
            let b = mat(2, 2, &pb);
            let cm = mat(2, 2, &pc);
            let lhs = &a.kron(&b.conj()) * &double_ket(&cm);
            let rhs = double_ket(&(&(&a * &cm) * &b.adjoint()));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-13);
            // explicit index form: Σ_{jl} A[i,j] conj(B[k,l]) C[j,l]
            for i in 0..2 {
                for k in 0..2 {
                    let mut s = ZERO;
                    for j in 0..2 {
                        for l in 0..2 {
                            s += a[(i, j)] * b[(k, l)].conj() * cm[(j, l)];
                        }
                    }
                    prop_assert!((lhs[(2 * i + k, 0)] - s).norm() < 1e-13);
                }
            }
        }

        #[test]
        fn permutation_matches_swapped_kron(pa in prop::collection::vec(-1.0f64..1.0, 8), pb in prop::collection::vec(-1.0f64..1.0, 18)) {
            let a = mat(2, 2, &pa);
            let b = mat(3, 3, &pb);
            let f = TensorFactorization::new(vec![2, 3]).unwrap();
            let p = permute_factors(&a.kron(&b), &f, &[1, 0]).unwrap();
            prop_assert!(p.max_abs_diff(&b.kron(&a)) < 1e-15);
        }
    }
}
