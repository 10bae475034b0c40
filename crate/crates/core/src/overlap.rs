//! The rank-one maximum-overlap problem sup_R ⟨φ|(R⊗1)(μ)|φ⟩: two-sided
//! estimates, the quadratic overlapper, min-entropy bounds and the reduction
//! from state discrimination.

use crate::channel::{map_from_choi, ChoiMatrix, CpMap};
use crate::error::{Error, Result};
use crate::measure::{BoundReport, Ensemble};
use crate::numlin::{
    double_ket, operator_norm, partial_trace, permute_factors, ComplexMatrix, HermitianOperator,
    TensorFactorization, C64, ONE, ZERO,
};

/// μ ≥ 0 on K ⊗ H and a unit vector φ on L ⊗ H.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapInstance {
    dim_k: usize,
    dim_h: usize,
    dim_l: usize,
    mu: HermitianOperator,
    phi: Vec<C64>,
}

/// μ restricted to K ⊗ supp(φ_H), with both marginals of |φ⟩⟨φ|.
#[derive(Clone, Debug)]
pub struct HattedInstance {
    pub mu_hat: HermitianOperator,
    pub phi_h: HermitianOperator,
    pub phi_l: HermitianOperator,
}

/// Conditional min-entropy bracket in bits.
#[derive(Clone, Debug, PartialEq)]
pub struct MinEntropyReport {
    pub s: f64,
    pub lower: f64,
    pub upper: f64,
}

impl OverlapInstance {
    pub fn new(
        dim_k: usize,
        dim_h: usize,
        dim_l: usize,
        mu: HermitianOperator,
        phi: Vec<C64>,
    ) -> Result<Self> {
        if dim_k == 0 || dim_h == 0 || dim_l == 0 {
            return Err(Error::DimensionMismatch(
                "factor dimensions must be positive".into(),
            ));
        }
        if mu.dim() != dim_k * dim_h {
            return Err(Error::DimensionMismatch(format!(
                "mu has size {}, expected {dim_k}·{dim_h}",
                mu.dim()
            )));
        }
        if phi.len() != dim_l * dim_h {
            return Err(Error::LengthMismatch {
                expected: dim_l * dim_h,
                got: phi.len(),
            });
        }
        if phi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let norm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NormalizationError(format!(
                "phi has norm {norm}, expected 1"
            )));
        }
        mu.check_psd_default()?;
        Ok(Self {
            dim_k,
            dim_h,
            dim_l,
            mu,
            phi,
        })
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_l(&self) -> usize {
        self.dim_l
    }

    pub fn mu(&self) -> &HermitianOperator {
        &self.mu
    }

    pub fn phi(&self) -> &[C64] {
        &self.phi
    }

    /// φ reshaped to an L × H matrix.
    pub fn phi_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim_l, self.dim_h, |l, h| self.phi[l * self.dim_h + h])
    }

    /// Same problem with μ replaced by cμ.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.dim_k,
            self.dim_h,
            self.dim_l,
            self.mu.scale(c),
            self.phi.clone(),
        )
    }

    fn check_map(&self, r: &CpMap) -> Result<()> {
        if r.dim_in() != self.dim_k || r.dim_out() != self.dim_l {
            return Err(Error::DimensionMismatch(format!(
                "operation must map {} → {}, got {} → {}",
                self.dim_k,
                self.dim_l,
                r.dim_in(),
                r.dim_out()
            )));
        }
        Ok(())
    }
}

pub fn hat(inst: &OverlapInstance) -> Result<HattedInstance> {
    let pure = ComplexMatrix::outer(&inst.phi, &inst.phi);
    let lh = TensorFactorization::new(vec![inst.dim_l, inst.dim_h])?;
    let phi_h = HermitianOperator::from_hermitian_part(&partial_trace(&pure, &lh, &[1])?);
    let phi_l = HermitianOperator::from_hermitian_part(&partial_trace(&pure, &lh, &[0])?);
    let proj = ComplexMatrix::identity(inst.dim_k).kron(phi_h.positive_projection()?.matrix());
    Ok(HattedInstance {
        mu_hat: inst.mu.congruence(&proj),
        phi_h,
        phi_l,
    })
}

/// ⟨φ|(R⊗1)(μ)|φ⟩ = Σ_F w_F† μ w_F with w_F = (F†⊗1)φ.
pub fn overlap_value(inst: &OverlapInstance, r: &CpMap) -> Result<f64> {
    overlap_value_with(inst, inst.mu.matrix(), r)
}

fn overlap_value_with(inst: &OverlapInstance, mu: &ComplexMatrix, r: &CpMap) -> Result<f64> {
    inst.check_map(r)?;
    let id = ComplexMatrix::identity(inst.dim_h);
    let mut total = 0.0;
    for f in r.kraus() {
        let w = f.adjoint().kron(&id).matvec(&inst.phi);
        let mw = mu.matvec(&w);
        total += w.iter().zip(&mw).map(|(a, b)| a.conj() * b).sum::<C64>().re;
    }
    Ok(total)
}

/// Y = Tr_H[μ̂² (1_K ⊗ φ_H)], an operator on K.
fn overlap_y(inst: &OverlapInstance, hatted: &HattedInstance) -> Result<HermitianOperator> {
    let mu2 = hatted.mu_hat.matrix() * hatted.mu_hat.matrix();
    let weighted = &mu2 * &ComplexMatrix::identity(inst.dim_k).kron(hatted.phi_h.matrix());
    let kh = TensorFactorization::new(vec![inst.dim_k, inst.dim_h])?;
    Ok(HermitianOperator::from_hermitian_part(&partial_trace(
        &weighted,
        &kh,
        &[0],
    )?))
}

/// Λ = Tr √Y.
pub fn overlap_lambda(inst: &OverlapInstance) -> Result<f64> {
    let hatted = hat(inst)?;
    Ok(overlap_y(inst, &hatted)?.sqrt()?.trace())
}

/// R(υ) = Φ (Tr_K[μ̂² (Y^{-1/2+} υ Y^{-1/2+} ⊗ 1)])ᵀ Φ†, assembled through
/// its Choi matrix.
pub fn quadratic_overlapper(inst: &OverlapInstance) -> Result<CpMap> {
    let hatted = hat(inst)?;
    let y = overlap_y(inst, &hatted)?;
    let dec = y.eig()?;
    if dec.eigenvalues.last().copied().unwrap_or(0.0) <= dec.rank_cutoff() {
        return Err(Error::DegenerateInput("overlap instance has Y = 0".into()));
    }
    let w = dec.map_positive(|l| l.powf(-0.5));
    let (dk, dh, dl) = (inst.dim_k, inst.dim_h, inst.dim_l);
    let mu2 = hatted.mu_hat.matrix() * hatted.mu_hat.matrix();
    let kh = TensorFactorization::new(vec![dk, dh])?;
    let phi = inst.phi_matrix();
    let id_h = ComplexMatrix::identity(dh);
    let mut choi = ComplexMatrix::zeros(dl * dk, dl * dk);
    for k in 0..dk {
        for kp in 0..dk {
            // υ = |k⟩⟨k'| so υ̃ = W|k⟩⟨k'|W
            let tilde =
                ComplexMatrix::from_fn(dk, dk, |a, b| w.matrix()[(a, k)] * w.matrix()[(kp, b)]);
            let z = partial_trace(&(&mu2 * &tilde.kron(&id_h)), &kh, &[1])?.transpose();
            let out = &(&phi * &z) * &phi.adjoint();
            for l in 0..dl {
                for lp in 0..dl {
                    choi[(l * dk + k, lp * dk + kp)] = out[(l, lp)];
                }
            }
        }
    }
    let c = ChoiMatrix::new(dk, dl, HermitianOperator::from_hermitian_part(&choi))?;
    map_from_choi(&c)
}

/// Λ²/Tr μ̂ ≤ overlap(R^QO) ≤ max ≤ Λ. A vanishing Y gives an all-zero
/// report (0²/0 read as 0).
pub fn overlap_bounds(inst: &OverlapInstance) -> Result<BoundReport> {
    let hatted = hat(inst)?;
    let y = overlap_y(inst, &hatted)?;
    let dec = y.eig()?;
    let trace_hat = hatted.mu_hat.trace();
    if dec.eigenvalues.last().copied().unwrap_or(0.0) <= dec.rank_cutoff() {
        return Ok(BoundReport {
            lambda: 0.0,
            lambda_sq: 0.0,
            lower: 0.0,
            achieved: 0.0,
            upper: 0.0,
            lambda_cap: trace_hat.max(0.0),
            oracle_optimal: None,
        });
    }
    let lambda = dec.map_positive(f64::sqrt).trace();
    let achieved = overlap_value(inst, &quadratic_overlapper(inst)?)?;
    Ok(BoundReport {
        lambda,
        lambda_sq: lambda * lambda,
        lower: lambda * lambda / trace_hat,
        achieved,
        upper: lambda,
        lambda_cap: trace_hat,
        oracle_optimal: None,
    })
}

/// Λ·‖(R†⊗1)(|φ⟩⟨φ|)‖_∞^{1/2}. An upper bound on the maximum only when `r`
/// attains it; for other `r` it is a diagnostic.
pub fn refined_upper_leg(inst: &OverlapInstance, r: &CpMap) -> Result<f64> {
    inst.check_map(r)?;
    let lambda = overlap_lambda(inst)?;
    let pure = ComplexMatrix::outer(&inst.phi, &inst.phi);
    let back = r.adjoint().apply_tensor_identity(&pure, inst.dim_h)?;
    Ok(lambda * operator_norm(&back)?.sqrt())
}

/// φ → (1⊗X)φ/‖(1⊗X)φ‖, μ → ‖(1⊗X)φ‖² (1⊗X⁻¹)†μ(1⊗X⁻¹). Overlaps of every
/// operation are unchanged; the bounds may sharpen.
pub fn rescale(inst: &OverlapInstance, x: &ComplexMatrix) -> Result<OverlapInstance> {
    if x.rows() != inst.dim_h || x.cols() != inst.dim_h {
        return Err(Error::DimensionMismatch("rescaling must act on H".into()));
    }
    let inv = x
        .as_nalgebra()
        .clone()
        .try_inverse()
        .map(ComplexMatrix::from_nalgebra)
        .ok_or_else(|| Error::DegenerateInput("rescaling operator is singular".into()))?;
    let xphi = ComplexMatrix::identity(inst.dim_l)
        .kron(x)
        .matvec(&inst.phi);
    let n2: f64 = xphi.iter().map(|z| z.norm_sqr()).sum();
    if n2 == 0.0 {
        return Err(Error::DegenerateInput("rescaled vector vanishes".into()));
    }
    let phi = xphi.iter().map(|z| z / n2.sqrt()).collect();
    let big_inv = ComplexMatrix::identity(inst.dim_k).kron(&inv);
    let mu = inst.mu.congruence(&big_inv.adjoint()).scale(n2);
    OverlapInstance::new(inst.dim_k, inst.dim_h, inst.dim_l, mu, phi)
}

/// Discrimination as overlap: K = system, H = L = C^m, μ = Σ ρ_k ⊗ |k⟩⟨k|,
/// φ = m^{-1/2} Σ |k⟩|k⟩. Then m·overlap(R^M) = P_succ(M).
pub fn ensemble_to_overlap(e: &Ensemble) -> Result<OverlapInstance> {
    let (d, m) = (e.dim(), e.len());
    let mut mu = HermitianOperator::zeros(d * m);
    for (k, rho) in e.states().iter().enumerate() {
        let mut proj = ComplexMatrix::zeros(m, m);
        proj[(k, k)] = ONE;
        mu = mu.add(&HermitianOperator::from_hermitian_part(
            &rho.matrix().kron(&proj),
        ));
    }
    let amp = C64::new(1.0 / (m as f64).sqrt(), 0.0);
    let phi = (0..m * m)
        .map(|i| if i / m == i % m { amp } else { ZERO })
        .collect();
    OverlapInstance::new(d, m, m, mu, phi)
}

/// Channel reversal as overlap: K = output of `map`, H = reference copy of
/// the input, L = input, μ = (A⊗1)(|√ρ⟩⟩⟨⟨√ρ|), φ = |√ρ⟩⟩. Then
/// overlap(R) = F_e(ρ, R∘A).
pub fn recovery_instance(map: &CpMap, rho: &HermitianOperator) -> Result<OverlapInstance> {
    if rho.dim() != map.dim_in() {
        return Err(Error::DimensionMismatch(
            "state does not match map input".into(),
        ));
    }
    rho.check_psd_default()?;
    if (rho.trace() - 1.0).abs() > 1e-10 {
        return Err(Error::NormalizationError(format!(
            "state has trace {}, expected 1",
            rho.trace()
        )));
    }
    let d = rho.dim();
    let phi = double_ket(rho.sqrt()?.matrix()).column_entries(0);
    let mu = map.apply_tensor_identity(&ComplexMatrix::outer(&phi, &phi), d)?;
    OverlapInstance::new(
        map.dim_out(),
        d,
        d,
        HermitianOperator::from_hermitian_part(&mu),
        phi,
    )
}

fn check_bipartite(rho_ab: &HermitianOperator, dims: &TensorFactorization) -> Result<()> {
    if dims.len() != 2 || dims.total() != rho_ab.dim() {
        return Err(Error::DimensionMismatch(format!(
            "bipartite state of size {} with factors {:?}",
            rho_ab.dim(),
            dims.dims()
        )));
    }
    rho_ab.check_psd_default()?;
    if (rho_ab.trace() - 1.0).abs() > 1e-10 {
        return Err(Error::NormalizationError(format!(
            "state has trace {}, expected 1",
            rho_ab.trace()
        )));
    }
    Ok(())
}

/// Bracket on H_min(A|B) for a parameter s:
/// lower = −log₂(√Tr ρ_A^s · T), upper = −log₂(T²/Tr ρ_A^{1−s}),
/// T = Tr_B √(Tr_A ρ_AB ρ_A^{−s} ρ_AB), with pseudo powers throughout.
pub fn min_entropy_bounds(
    rho_ab: &HermitianOperator,
    dims: &TensorFactorization,
    s: f64,
) -> Result<MinEntropyReport> {
    if !s.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    check_bipartite(rho_ab, dims)?;
    let (da, db) = (dims.dims()[0], dims.dims()[1]);
    let rho_a =
        HermitianOperator::from_hermitian_part(&partial_trace(rho_ab.matrix(), dims, &[0])?);
    let weight = rho_a
        .pseudo_power(-s)?
        .matrix()
        .kron(&ComplexMatrix::identity(db));
    let inner = &(rho_ab.matrix() * &weight) * rho_ab.matrix();
    let reduced = HermitianOperator::from_hermitian_part(&partial_trace(&inner, dims, &[1])?);
    let t = reduced.sqrt()?.trace();
    let tr_s = rho_a.pseudo_power(s)?.trace();
    let tr_1s = rho_a.pseudo_power(1.0 - s)?.trace();
    debug_assert_eq!(rho_a.dim(), da);
    Ok(MinEntropyReport {
        s,
        lower: -(tr_s.sqrt() * t).log2(),
        upper: -(t * t / tr_1s).log2(),
    })
}

/// Bounds for each s plus the tightest combination (max lower, min upper).
pub fn min_entropy_sweep(
    rho_ab: &HermitianOperator,
    dims: &TensorFactorization,
    grid: &[f64],
) -> Result<(Vec<MinEntropyReport>, f64, f64)> {
    let reports = grid
        .iter()
        .map(|&s| min_entropy_bounds(rho_ab, dims, s))
        .collect::<Result<Vec<_>>>()?;
    let best_lower = reports
        .iter()
        .map(|r| r.lower)
        .fold(f64::NEG_INFINITY, f64::max);
    let best_upper = reports
        .iter()
        .map(|r| r.upper)
        .fold(f64::INFINITY, f64::min);
    Ok((reports, best_lower, best_upper))
}

impl MinEntropyReport {
    pub fn validate(&self) -> Result<()> {
        if !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::InvariantViolation("non-finite entropy bound".into()));
        }
        if self.lower > self.upper + 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "entropy bounds out of order at s = {}: {} > {}",
                self.s, self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// The overlap instance behind the min-entropy bracket: K = B, H = A,
/// L = A*, φ = |ρ_A^{s/2}⟩⟩/‖·‖ and μ = ‖ρ_A^{s/2}‖₂² ρ_A^{−s/2} ρ_AB ρ_A^{−s/2}.
pub fn min_entropy_instance(
    rho_ab: &HermitianOperator,
    dims: &TensorFactorization,
    s: f64,
) -> Result<OverlapInstance> {
    check_bipartite(rho_ab, dims)?;
    let (da, db) = (dims.dims()[0], dims.dims()[1]);
    let rho_a =
        HermitianOperator::from_hermitian_part(&partial_trace(rho_ab.matrix(), dims, &[0])?);
    let half = rho_a.pseudo_power(s / 2.0)?;
    let norm2 = half.matrix().frobenius_norm().powi(2);
    let w = rho_a
        .pseudo_power(-s / 2.0)?
        .matrix()
        .kron(&ComplexMatrix::identity(db));
    let mu_ab = rho_ab.congruence(&w).scale(norm2);
    let mu_ba = permute_factors(mu_ab.matrix(), dims, &[1, 0])?;
    // φ on A* ⊗ A: entry (a*, a) = ρ_A^{s/2}[a, a*]
    let phi = (0..da * da)
        .map(|i| half.matrix()[(i % da, i / da)] / norm2.sqrt())
        .collect();
    OverlapInstance::new(
        db,
        da,
        da,
        HermitianOperator::from_hermitian_part(&mu_ba),
        phi,
    )
}
