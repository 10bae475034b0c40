//! Completely positive maps: Kraus lists, Choi matrices, Stinespring
//! dilations, ρ-Kraus decompositions and approximate reversal.

mod recovery;
mod rho_kraus;

pub use recovery::{
    barnum_knill_recovery, quadratic_recovery, recovery_bounds, recovery_lambda, transpose_channel,
};
pub use rho_kraus::{
    entanglement_fidelity, functional_calculus, quadratic_reweighting, rho_kraus,
    RhoKrausDecomposition,
};

use crate::error::{Error, Result};
use crate::measure::Povm;
use crate::numlin::{
    double_ket, from_double_ket, operator_norm, partial_trace, trace_norm, ComplexMatrix,
    HermitianOperator, TensorFactorization, C64, ONE, ZERO,
};

const OPERATION_TOL: f64 = 1e-10;

/// CP map K → L given by Kraus operators (each `dim_out × dim_in`).
///
/// Any CP map is representable; use [`CpMap::check_quantum_operation`] to
/// require Σ F†F ≤ 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CpMap {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

/// Choi matrix on L ⊗ K*: entry [(l,k),(l',k')] = R(|k⟩⟨k'|)[l,l'].
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: HermitianOperator,
}

/// Contraction U: K → L ⊗ E with R(ρ) = Tr_E UρU†. Row index is
/// `l·dim_env + e`.
#[derive(Clone, Debug, PartialEq)]
pub struct StinespringDilation {
    pub dim_in: usize,
    pub dim_out: usize,
    pub dim_env: usize,
    pub matrix: ComplexMatrix,
}

impl CpMap {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::DimensionMismatch(
                "map dimensions must be positive".into(),
            ));
        }
        if kraus.is_empty() {
            return Err(Error::DegenerateInput("empty Kraus list".into()));
        }
        for f in &kraus {
            if f.rows() != dim_out || f.cols() != dim_in {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {dim_out}x{dim_in}",
                    f.rows(),
                    f.cols()
                )));
            }
            if !f.is_finite() {
                return Err(Error::NonFiniteInput);
            }
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        Self {
            dim_in,
            dim_out,
            kraus: vec![ComplexMatrix::zeros(dim_out, dim_in)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![ComplexMatrix::identity(dim)],
        }
    }

    /// ρ ↦ UρU†; rejects non-unitary input.
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::DimensionMismatch("unitary must be square".into()));
        }
        let d = u.rows();
        let defect = operator_norm(&(&(&u.adjoint() * &u) - &ComplexMatrix::identity(d)))?;
        if defect > OPERATION_TOL {
            return Err(Error::NormalizationError(format!(
                "matrix is not unitary (defect {defect:.3e})"
            )));
        }
        Self::new(d, d, vec![u])
    }

    /// ρ ↦ (1-p)ρ + p·Tr(ρ)·1/d.
    pub fn depolarizing(p: f64, d: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::DegenerateInput(format!(
                "depolarizing parameter {p} outside [0, 1]"
            )));
        }
        if d == 0 {
            return Err(Error::DimensionMismatch(
                "dimension must be positive".into(),
            ));
        }
        let mut kraus = vec![ComplexMatrix::identity(d).scale_real((1.0 - p).sqrt())];
        let w = (p / d as f64).sqrt();
        for i in 0..d {
            for j in 0..d {
                let mut e = ComplexMatrix::zeros(d, d);
                e[(i, j)] = C64::new(w, 0.0);
                kraus.push(e);
            }
        }
        Self::new(d, d, kraus)
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::DegenerateInput(format!(
                "damping parameter {gamma} outside [0, 1]"
            )));
        }
        let r = |x: f64| C64::new(x, 0.0);
        let k0 =
            ComplexMatrix::from_row_major(2, 2, vec![ONE, ZERO, ZERO, r((1.0 - gamma).sqrt())])?;
        let k1 = ComplexMatrix::from_row_major(2, 2, vec![ZERO, r(gamma.sqrt()), ZERO, ZERO])?;
        Self::new(2, 2, vec![k0, k1])
    }

    /// ρ ↦ Σ_k Tr(M_kρ) |k⟩⟨k|, Kraus operators |k⟩⟨i|√M_k.
    pub fn measurement_channel(povm: &Povm) -> Result<Self> {
        let d = povm.dim();
        let m = povm.len();
        let mut kraus = Vec::with_capacity(m * d);
        for (k, el) in povm.elements().iter().enumerate() {
            let root = el.sqrt()?;
            for i in 0..d {
                kraus.push(ComplexMatrix::from_fn(m, d, |r, c| {
                    if r == k {
                        root.matrix()[(i, c)]
                    } else {
                        ZERO
                    }
                }));
            }
        }
        Self::new(d, m, kraus)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn kraus_count(&self) -> usize {
        self.kraus.len()
    }

    /// Σ F†F = A†(1).
    pub fn kraus_sum(&self) -> HermitianOperator {
        let mut acc = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for f in &self.kraus {
            acc += &(&f.adjoint() * f);
        }
        HermitianOperator::from_hermitian_part(&acc)
    }

    /// Σ F†F ≤ 1 within 1e-10.
    pub fn check_quantum_operation(&self) -> Result<()> {
        let excess = self.kraus_sum().max_eigenvalue()? - 1.0;
        if excess > OPERATION_TOL {
            return Err(Error::NormalizationError(format!(
                "map increases trace (Σ F†F exceeds 1 by {excess:.3e})"
            )));
        }
        Ok(())
    }

    pub fn is_quantum_operation(&self) -> bool {
        self.check_quantum_operation().is_ok()
    }

    /// Σ F†F = 1 within 1e-10.
    pub fn is_channel(&self) -> bool {
        let defect = self
            .kraus_sum()
            .sub(&HermitianOperator::identity(self.dim_in));
        matches!(operator_norm(defect.matrix()), Ok(n) if n <= OPERATION_TOL)
    }

    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.dim_in || x.cols() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "map input dimension {}, operator is {}x{}",
                self.dim_in,
                x.rows(),
                x.cols()
            )));
        }
        let mut acc = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for f in &self.kraus {
            acc += &(&(f * x) * &f.adjoint());
        }
        Ok(acc)
    }

    pub fn apply(&self, rho: &HermitianOperator) -> Result<HermitianOperator> {
        Ok(HermitianOperator::from_hermitian_part(
            &self.apply_matrix(rho.matrix())?,
        ))
    }

    pub fn adjoint_apply(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        self.adjoint().apply(x)
    }

    /// The Hilbert-Schmidt adjoint, Kraus operators F†.
    pub fn adjoint(&self) -> CpMap {
        CpMap {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            kraus: self.kraus.iter().map(ComplexMatrix::adjoint).collect(),
        }
    }

    /// (A ⊗ 1_H) applied to an operator on K ⊗ H.
    pub fn apply_tensor_identity(&self, mu: &ComplexMatrix, dim_h: usize) -> Result<ComplexMatrix> {
        if mu.rows() != self.dim_in * dim_h || !mu.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "operator of size {} does not act on {}x{dim_h}",
                mu.rows(),
                self.dim_in
            )));
        }
        let id = ComplexMatrix::identity(dim_h);
        let mut acc = ComplexMatrix::zeros(self.dim_out * dim_h, self.dim_out * dim_h);
        for f in &self.kraus {
            let fe = f.kron(&id);
            acc += &(&(&fe * mu) * &fe.adjoint());
        }
        Ok(acc)
    }

    /// `self ∘ first`. Kraus products; recompressed through the Choi matrix
    /// when the count exceeds dim_in·dim_out.
    pub fn compose(&self, first: &CpMap) -> Result<CpMap> {
        if first.dim_out != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose map from {} after map into {}",
                self.dim_in, first.dim_out
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * first.kraus.len());
        for g in &self.kraus {
            for f in &first.kraus {
                kraus.push(g * f);
            }
        }
        let out = CpMap::new(first.dim_in, self.dim_out, kraus)?;
        if out.kraus.len() > out.dim_in * out.dim_out {
            return map_from_choi(&out.choi());
        }
        Ok(out)
    }

    pub fn choi(&self) -> ChoiMatrix {
        let n = self.dim_in * self.dim_out;
        let mut acc = ComplexMatrix::zeros(n, n);
        for f in &self.kraus {
            let v = double_ket(f);
            acc += &(&v * &v.adjoint());
        }
        ChoiMatrix {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            matrix: HermitianOperator::from_hermitian_part(&acc),
        }
    }

    pub fn canonical_stinespring(&self) -> Result<StinespringDilation> {
        canonical_stinespring(self)
    }
}

impl ChoiMatrix {
    /// Validates dimensions and positivity.
    pub fn new(dim_in: usize, dim_out: usize, matrix: HermitianOperator) -> Result<Self> {
        if matrix.dim() != dim_in * dim_out {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix of size {} for a {dim_in}→{dim_out} map",
                matrix.dim()
            )));
        }
        matrix.check_psd_default()?;
        Ok(Self {
            dim_in,
            dim_out,
            matrix,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &HermitianOperator {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Tr_L of the Choi matrix: the transpose of Σ F†F.
    pub fn input_marginal(&self) -> Result<ComplexMatrix> {
        let f = TensorFactorization::new(vec![self.dim_out, self.dim_in])?;
        partial_trace(self.matrix.matrix(), &f, &[1])
    }

    pub fn trace_distance(&self, other: &ChoiMatrix) -> Result<f64> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch(
                "Choi matrices of different maps".into(),
            ));
        }
        trace_norm(&(self.matrix.matrix() - other.matrix.matrix()))
    }

    pub fn max_abs_diff(&self, other: &ChoiMatrix) -> f64 {
        self.matrix.matrix().max_abs_diff(other.matrix.matrix())
    }

    pub fn to_map(&self) -> Result<CpMap> {
        map_from_choi(self)
    }
}

impl StinespringDilation {
    /// Tr_E UρU†.
    pub fn apply(&self, rho: &HermitianOperator) -> Result<HermitianOperator> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(
                "state does not match dilation input".into(),
            ));
        }
        let big = &(&self.matrix * rho.matrix()) * &self.matrix.adjoint();
        let f = TensorFactorization::new(vec![self.dim_out, self.dim_env])?;
        Ok(HermitianOperator::from_hermitian_part(&partial_trace(
            &big,
            &f,
            &[0],
        )?))
    }

    /// Kraus operators F_e[l,k] = U[(l,e),k].
    pub fn to_map(&self) -> Result<CpMap> {
        let kraus = (0..self.dim_env)
            .map(|e| {
                ComplexMatrix::from_fn(self.dim_out, self.dim_in, |l, k| {
                    self.matrix[(l * self.dim_env + e, k)]
                })
            })
            .collect();
        CpMap::new(self.dim_in, self.dim_out, kraus)
    }

    /// ‖U‖_∞ — at most 1 for quantum operations.
    pub fn norm(&self) -> Result<f64> {
        operator_norm(&self.matrix)
    }
}

pub fn apply(map: &CpMap, rho: &HermitianOperator) -> Result<HermitianOperator> {
    map.apply(rho)
}

pub fn adjoint_apply(map: &CpMap, x: &HermitianOperator) -> Result<HermitianOperator> {
    map.adjoint_apply(x)
}

pub fn choi(map: &CpMap) -> ChoiMatrix {
    map.choi()
}

/// Kraus operators √λ·reshape(v) from the eigenpairs of the Choi matrix with
/// λ above the rank cutoff. A zero Choi matrix gives the zero map.
pub fn map_from_choi(c: &ChoiMatrix) -> Result<CpMap> {
    let dec = c.matrix.eig()?;
    let min = dec.eigenvalues[0];
    if min < -crate::numlin::psd_tolerance(&dec) {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let cutoff = dec.rank_cutoff();
    let mut kraus = Vec::new();
    for (j, &l) in dec.eigenvalues.iter().enumerate().rev() {
        if l <= cutoff {
            continue;
        }
        let v: Vec<C64> = dec.eigenvector(j).iter().map(|z| z * l.sqrt()).collect();
        kraus.push(from_double_ket(&v, c.dim_out, c.dim_in)?);
    }
    if kraus.is_empty() {
        return Ok(CpMap::zero(c.dim_in, c.dim_out));
    }
    CpMap::new(c.dim_in, c.dim_out, kraus)
}

/// Dilation through the square root of the Choi matrix, environment L ⊗ K*.
pub fn canonical_stinespring(map: &CpMap) -> Result<StinespringDilation> {
    let root = map.choi().matrix.sqrt()?;
    let (din, dout) = (map.dim_in, map.dim_out);
    let env = din * dout;
    let matrix = ComplexMatrix::from_fn(dout * env, din, |row, k| {
        let (l, e) = (row / env, row % env);
        root.matrix()[(l * din + k, e)]
    });
    Ok(StinespringDilation {
        dim_in: din,
        dim_out: dout,
        dim_env: env,
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::trace_norm;
    use crate::random;
    use proptest::prelude::*;

    #[test]
    fn identity_and_depolarizing_action() {
        let mut rng = random::rng(1);
        let rho = random::random_density(&mut rng, 3);
        let out = CpMap::identity(3).apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);

        let full = CpMap::depolarizing(1.0, 2).unwrap();
        let rho2 = random::random_density(&mut rng, 2);
        let out = full.apply(&rho2).unwrap();
        assert!(
            out.matrix()
                .max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5))
                < 1e-15
        );

        let half = CpMap::depolarizing(0.5, 2).unwrap();
        let zero = HermitianOperator::from_real_diagonal(&[1.0, 0.0]);
        let out = half.apply(&zero).unwrap();
        assert!(
            out.matrix()
                .max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.75, 0.25]))
                < 1e-15
        );
        assert!(half.is_channel());
    }

    #[test]
    fn adjoint_examples() {
        let mut rng = random::rng(2);
        let x = random::random_density(&mut rng, 2);
        let id = CpMap::identity(2).adjoint_apply(&x).unwrap();
        assert!(id.matrix().max_abs_diff(x.matrix()) < 1e-15);
        let ch = random::random_channel(&mut rng, 3, 2, 3);
        let one = ch.adjoint_apply(&HermitianOperator::identity(2)).unwrap();
        assert!(one.matrix().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn choi_examples() {
        let c = CpMap::identity(2).choi();
        let expected = {
            let v = double_ket(&ComplexMatrix::identity(2));
            &v * &v.adjoint()
        };
        assert!(c.matrix().matrix().max_abs_diff(&expected) < 1e-15);
        assert!((c.trace() - 2.0).abs() < 1e-15);

        let full = CpMap::depolarizing(1.0, 2).unwrap().choi();
        assert!(
            full.matrix()
                .matrix()
                .max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.5))
                < 1e-15
        );
    }

    #[test]
    fn choi_entries_follow_basis_action() {
        let mut rng = random::rng(3);
        let map = random::random_operation(&mut rng, 2, 3, 2);
        let c = map.choi();
        for k in 0..2 {
            for kp in 0..2 {
                let mut e = ComplexMatrix::zeros(2, 2);
                e[(k, kp)] = ONE;
                let out = map.apply_matrix(&e).unwrap();
                for l in 0..3 {
                    for lp in 0..3 {
                        let entry = c.matrix().matrix()[(l * 2 + k, lp * 2 + kp)];
                        assert!((entry - out[(l, lp)]).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_choi_is_rejected() {
        let bad = HermitianOperator::from_real_diagonal(&[1.0, -1.0, 0.0, 0.0]);
        assert!(matches!(
            ChoiMatrix::new(2, 2, bad),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn stinespring_examples() {
        let u = CpMap::identity(2).canonical_stinespring().unwrap();
        let map = u.to_map().unwrap();
        assert!(map.choi().max_abs_diff(&CpMap::identity(2).choi()) < 1e-14);
        assert!((u.norm().unwrap() - 1.0).abs() < 1e-12);

        let mut rng = random::rng(4);
        let povm = random::random_povm(&mut rng, 3, 2);
        let meas = CpMap::measurement_channel(&povm).unwrap();
        let dil = meas.canonical_stinespring().unwrap();
        let rho = random::random_density(&mut rng, 2);
        let a = meas.apply(&rho).unwrap();
        let b = dil.apply(&rho).unwrap();
        assert!(trace_norm(&(a.matrix() - b.matrix())).unwrap() < 1e-10);
        for k in 0..3 {
            let expected = povm.elements()[k].trace_product(&rho);
            assert!((a.matrix()[(k, k)].re - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn constructors_validate() {
        assert!(CpMap::depolarizing(1.5, 2).is_err());
        assert!(CpMap::amplitude_damping(-0.1).is_err());
        assert!(CpMap::unitary(ComplexMatrix::from_real_diagonal(&[1.0, 2.0])).is_err());
        assert!(CpMap::amplitude_damping(0.3).unwrap().is_channel());
        let bad = CpMap::new(2, 2, vec![ComplexMatrix::identity(2).scale_real(1.1)]).unwrap();
        assert!(!bad.is_quantum_operation());
        assert!(matches!(
            CpMap::new(2, 3, vec![ComplexMatrix::identity(2)]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn composition_matches_sequential_application() {
        let mut rng = random::rng(5);
        let a = random::random_channel(&mut rng, 2, 3, 4);
        let b = random::random_channel(&mut rng, 3, 2, 4);
        let ba = b.compose(&a).unwrap();
        assert!(ba.kraus_count() <= 4);
        let rho = random::random_density(&mut rng, 2);
        let seq = b.apply(&a.apply(&rho).unwrap()).unwrap();
        assert!(ba.apply(&rho).unwrap().matrix().max_abs_diff(seq.matrix()) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn adjoint_duality(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4) {
            let mut rng = random::rng(seed);
            let map = random::random_operation(&mut rng, din, dout, 3);
            let x = random::random_hermitian(&mut rng, dout);
            let y = random::random_hermitian(&mut rng, din);
            let lhs = x.trace_product(&map.apply(&y).unwrap());
            let rhs = map.adjoint_apply(&x).unwrap().trace_product(&y);
            prop_assert!((lhs - rhs).abs() < 1e-11);
        }

        #[test]
        fn choi_round_trip(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4) {
            let mut rng = random::rng(seed);
            let map = random::random_operation(&mut rng, din, dout, 2);
            let c = map.choi();
            let back = map_from_choi(&c).unwrap().choi();
            prop_assert!(c.trace_distance(&back).unwrap() < 1e-10);
            prop_assert!(c.trace() <= din as f64 + 1e-10);
        }

        #[test]
        fn stinespring_reproduces_map(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4) {
            let mut rng = random::rng(seed);
            let map = random::random_operation(&mut rng, din, dout, 3);
            let dil = map.canonical_stinespring().unwrap();
            prop_assert_eq!(dil.dim_env, din * dout);
            prop_assert!(dil.norm().unwrap() <= 1.0 + 1e-10);
            let rho = random::random_density(&mut rng, din);
            let diff = dil.apply(&rho).unwrap().sub(&map.apply(&rho).unwrap());
            prop_assert!(trace_norm(diff.matrix()).unwrap() < 1e-10);
        }

        #[test]
        fn channels_preserve_trace_and_positivity(seed in any::<u64>()) {
            let mut rng = random::rng(seed);
            let map = random::random_channel(&mut rng, 3, 2, 2);
            prop_assert!(map.is_channel());
            let rho = random::random_density(&mut rng, 3);
            let out = map.apply(&rho).unwrap();
            prop_assert!((out.trace() - 1.0).abs() < 1e-12);
            prop_assert!(out.min_eigenvalue().unwrap() > -1e-12);
            let marginal = map.choi().input_marginal().unwrap();
            prop_assert!(marginal.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        }
    }
}
