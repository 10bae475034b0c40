use super::CpMap;
use crate::error::{Error, Result};
use crate::numlin::{double_ket, from_double_ket, ComplexMatrix, HermitianOperator, C64};

const ORTHONORMALITY_TOL: f64 = 1e-9;

/// A(μ) = Σ p_k E_k μ E_k† with Tr(E_k†E_ℓρ) = δ_kℓ.
#[derive(Clone, Debug)]
pub struct RhoKrausDecomposition {
    pub weights: Vec<f64>,
    pub operators: Vec<ComplexMatrix>,
    pub base_state: HermitianOperator,
}

impl RhoKrausDecomposition {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Gram matrix Tr(E_k†E_ℓρ).
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.len();
        let rho = self.base_state.matrix();
        ComplexMatrix::from_fn(n, n, |k, l| {
            (&(&self.operators[k].adjoint() * &self.operators[l]) * rho).trace()
        })
    }

    /// Orthonormality and support conditions.
    pub fn validate(&self) -> Result<()> {
        let gram = self.gram();
        let defect = gram.max_abs_diff(&ComplexMatrix::identity(self.len()));
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::InvariantViolation(format!(
                "branch operators are not ρ-orthonormal (defect {defect:.3e})"
            )));
        }
        let proj = self.base_state.positive_projection()?;
        let complement = &ComplexMatrix::identity(proj.dim()) - proj.matrix();
        for e in &self.operators {
            let leak = (e * &complement).max_abs();
            if leak > ORTHONORMALITY_TOL {
                return Err(Error::InvariantViolation(format!(
                    "branch operator leaves the support of ρ ({leak:.3e})"
                )));
            }
        }
        Ok(())
    }

    /// CP map Σ g(p_k) E_k · E_k†.
    pub fn reweighted(
        &self,
        dim_in: usize,
        dim_out: usize,
        mut g: impl FnMut(f64) -> f64,
    ) -> Result<CpMap> {
        let mut kraus = Vec::with_capacity(self.len());
        for (p, e) in self.weights.iter().zip(&self.operators) {
            let w = g(*p);
            if !w.is_finite() || w < 0.0 {
                return Err(Error::DegenerateInput(format!(
                    "weight function gives {w} at {p}; must be finite and non-negative"
                )));
            }
            kraus.push(e.scale_real(w.sqrt()));
        }
        if kraus.is_empty() {
            return Ok(CpMap::zero(dim_in, dim_out));
        }
        CpMap::new(dim_in, dim_out, kraus)
    }
}

fn check_state(map: &CpMap, rho: &HermitianOperator) -> Result<()> {
    if rho.dim() != map.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} but map input {}",
            rho.dim(),
            map.dim_in()
        )));
    }
    rho.check_psd_default()
}

/// Branches of A restricted to supp(ρ), from the spectral decomposition of
/// (A ⊗ 1)(|√ρ⟩⟩⟨⟨√ρ|) = Σ_F |F√ρ⟩⟩⟨⟨F√ρ|.
pub fn rho_kraus(map: &CpMap, rho: &HermitianOperator) -> Result<RhoKrausDecomposition> {
    check_state(map, rho)?;
    let (din, dout) = (map.dim_in(), map.dim_out());
    let root = rho.sqrt()?;
    let inv_root = rho.pseudo_power(-0.5)?;
    let n = din * dout;
    let mut c = ComplexMatrix::zeros(n, n);
    for f in map.kraus() {
        let v = double_ket(&(f * root.matrix()));
        c += &(&v * &v.adjoint());
    }
    let dec = HermitianOperator::from_hermitian_part(&c).eig()?;
    let cutoff = dec.rank_cutoff();
    let mut weights = Vec::new();
    let mut operators = Vec::new();
    for (j, &p) in dec.eigenvalues.iter().enumerate().rev() {
        if p <= cutoff {
            continue;
        }
        let f = from_double_ket(&dec.eigenvector(j), dout, din)?;
        weights.push(p);
        operators.push(&f * inv_root.matrix());
    }
    Ok(RhoKrausDecomposition {
        weights,
        operators,
        base_state: rho.clone(),
    })
}

/// f_ρ(A)(μ) = Σ f(p_k) E_k μ E_k†. Inputs are implicitly projected onto
/// supp(ρ), since every E_k vanishes off it.
pub fn functional_calculus(
    map: &CpMap,
    rho: &HermitianOperator,
    f: impl FnMut(f64) -> f64,
) -> Result<CpMap> {
    rho_kraus(map, rho)?.reweighted(map.dim_in(), map.dim_out(), f)
}

/// A^(2,ρ)(μ) = Σ_{kℓ} F_k Π μ Π F_ℓ† Tr(F_k†F_ℓρ), from any Kraus set.
pub fn quadratic_reweighting(map: &CpMap, rho: &HermitianOperator) -> Result<CpMap> {
    check_state(map, rho)?;
    let proj = rho.positive_projection()?;
    let fs = map.kraus();
    let n = fs.len();
    let t = ComplexMatrix::from_fn(n, n, |k, l| {
        (&(&fs[k].adjoint() * &fs[l]) * rho.matrix()).trace()
    });
    let dec = HermitianOperator::from_hermitian_part(&t).eig()?;
    let cutoff = dec.rank_cutoff();
    let mut kraus = Vec::new();
    for (j, &tj) in dec.eigenvalues.iter().enumerate().rev() {
        if tj <= cutoff {
            continue;
        }
        let v = dec.eigenvector(j);
        let mut g = ComplexMatrix::zeros(map.dim_out(), map.dim_in());
        for (k, f) in fs.iter().enumerate() {
            g += &f.scale(v[k]);
        }
        kraus.push(&g.scale_real(tj.sqrt()) * proj.matrix());
    }
    if kraus.is_empty() {
        return Ok(CpMap::zero(map.dim_in(), map.dim_out()));
    }
    CpMap::new(map.dim_in(), map.dim_out(), kraus)
}

/// ⟨ψ_ρ|(Ξ ⊗ 1)(|ψ_ρ⟩⟨ψ_ρ|)|ψ_ρ⟩ with the canonical purification ψ_ρ = |√ρ⟩⟩.
pub fn entanglement_fidelity(map: &CpMap, rho: &HermitianOperator) -> Result<f64> {
    if map.dim_in() != map.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "entanglement fidelity needs a map H→H, got {}→{}",
            map.dim_in(),
            map.dim_out()
        )));
    }
    check_state(map, rho)?;
    if (rho.trace() - 1.0).abs() > 1e-10 {
        return Err(Error::NormalizationError(format!(
            "state has trace {}, expected 1",
            rho.trace()
        )));
    }
    let root = rho.sqrt()?;
    let psi = double_ket(root.matrix());
    let mut total = 0.0;
    for f in map.kraus() {
        let amp: C64 = psi.hs_inner(&double_ket(&(f * root.matrix())));
        total += amp.norm_sqr();
    }
    Ok(total)
}
