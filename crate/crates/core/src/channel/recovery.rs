use super::rho_kraus::{entanglement_fidelity, quadratic_reweighting};
use super::{map_from_choi, CpMap};
use crate::error::{Error, Result};
use crate::measure::BoundReport;
use crate::numlin::{ComplexMatrix, HermitianOperator};

fn check_unit_state(map: &CpMap, rho: &HermitianOperator) -> Result<()> {
    if rho.dim() != map.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} but map input {}",
            rho.dim(),
            map.dim_in()
        )));
    }
    rho.check_psd_default()?;
    if (rho.trace() - 1.0).abs() > 1e-10 {
        return Err(Error::NormalizationError(format!(
            "state has trace {}, expected 1",
            rho.trace()
        )));
    }
    Ok(())
}

/// S^{-1/2+}, or DegenerateInput when S has no positive part.
fn inverse_root(s: &HermitianOperator) -> Result<HermitianOperator> {
    let dec = s.eig()?;
    if dec.eigenvalues.last().copied().unwrap_or(0.0) <= dec.rank_cutoff() {
        return Err(Error::DegenerateInput(
            "normalizing operator vanishes".into(),
        ));
    }
    Ok(dec.map_positive(|l| l.powf(-0.5)))
}

fn recompress(din: usize, dout: usize, kraus: Vec<ComplexMatrix>) -> Result<CpMap> {
    map_from_choi(&CpMap::new(din, dout, kraus)?.choi())
}

/// R(υ) = ρ A2†(S^{-1/2+} υ S^{-1/2+}) ρ with A2 the quadratic reweighting
/// and S = A2(ρ²). Kraus operators ρ G_j† S^{-1/2+}.
pub fn quadratic_recovery(map: &CpMap, rho: &HermitianOperator) -> Result<CpMap> {
    check_unit_state(map, rho)?;
    let a2 = quadratic_reweighting(map, rho)?;
    let rho_sq = HermitianOperator::from_hermitian_part(&(rho.matrix() * rho.matrix()));
    let w = inverse_root(&a2.apply(&rho_sq)?)?;
    let kraus = a2
        .kraus()
        .iter()
        .map(|g| &(rho.matrix() * &g.adjoint()) * w.matrix())
        .collect();
    recompress(map.dim_out(), map.dim_in(), kraus)
}

/// R(υ) = √ρ A†((Aρ)^{-1/2+} υ (Aρ)^{-1/2+}) √ρ.
pub fn barnum_knill_recovery(map: &CpMap, rho: &HermitianOperator) -> Result<CpMap> {
    check_unit_state(map, rho)?;
    let root = rho.sqrt()?;
    let w = inverse_root(&map.apply(rho)?)?;
    let kraus = map
        .kraus()
        .iter()
        .map(|f| &(root.matrix() * &f.adjoint()) * w.matrix())
        .collect();
    recompress(map.dim_out(), map.dim_in(), kraus)
}

/// Barnum-Knill reversal for the maximally mixed input.
pub fn transpose_channel(map: &CpMap) -> Result<CpMap> {
    let d = map.dim_in();
    barnum_knill_recovery(map, &HermitianOperator::identity(d).scale(1.0 / d as f64))
}

/// Λ = Tr √(A2(ρ²)).
pub fn recovery_lambda(map: &CpMap, rho: &HermitianOperator) -> Result<f64> {
    check_unit_state(map, rho)?;
    let a2 = quadratic_reweighting(map, rho)?;
    let rho_sq = HermitianOperator::from_hermitian_part(&(rho.matrix() * rho.matrix()));
    Ok(a2.apply(&rho_sq)?.sqrt()?.trace())
}

/// Λ²/Tr A(ρ) ≤ F_e(ρ, R^QR∘A) ≤ Λ, with Tr A(ρ) as the ceiling on Λ.
pub fn recovery_bounds(map: &CpMap, rho: &HermitianOperator) -> Result<BoundReport> {
    let lambda = recovery_lambda(map, rho)?;
    let recovery = quadratic_recovery(map, rho)?;
    let achieved = entanglement_fidelity(&recovery.compose(map)?, rho)?;
    let out_trace = map.apply(rho)?.trace();
    let lambda_sq = lambda * lambda;
    let lower = if out_trace > 0.0 {
        lambda_sq / out_trace
    } else {
        0.0
    };
    Ok(BoundReport {
        lambda,
        lambda_sq,
        lower,
        achieved,
        upper: lambda,
        lambda_cap: out_trace,
        oracle_optimal: None,
    })
}
