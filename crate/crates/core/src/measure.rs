//! Ensembles, measurements, success rates and the square-root-type
//! measurements with their two-sided bounds.

use crate::error::{Error, Result};
use crate::numlin::{trace_norm, ComplexMatrix, HermitianOperator, C64, ZERO};

const NORMALIZATION_TOL: f64 = 1e-10;
const REPORT_SLACK: f64 = 1e-9;

/// Probability-weighted states ρ_k, with Tr ρ_k = p_k and Σ p_k = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    dim: usize,
    states: Vec<HermitianOperator>,
}

/// Measurement operators M_k ≥ 0 with Σ M_k ≤ 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<HermitianOperator>,
}

/// Measurement given by factors E_k with M_k = E_k†E_k.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedMeasurement {
    dim: usize,
    factors: Vec<ComplexMatrix>,
}

/// Two-sided estimate `lower ≤ achieved ≤ (optimum) ≤ upper`.
///
/// `lower` is Λ² for discrimination and Λ² divided by the relevant trace
/// for recovery and overlap. `lambda_cap` is the a-priori ceiling on Λ.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub lambda: f64,
    pub lambda_sq: f64,
    pub lower: f64,
    pub achieved: f64,
    pub upper: f64,
    pub lambda_cap: f64,
    pub oracle_optimal: Option<f64>,
}

fn check_dims(ops: &[HermitianOperator]) -> Result<usize> {
    let dim = ops
        .first()
        .ok_or_else(|| Error::DegenerateInput("empty operator list".into()))?
        .dim();
    if let Some(bad) = ops.iter().find(|o| o.dim() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "operators of dimension {dim} and {} mixed",
            bad.dim()
        )));
    }
    Ok(dim)
}

fn sum_ops(dim: usize, ops: impl IntoIterator<Item = HermitianOperator>) -> HermitianOperator {
    ops.into_iter()
        .fold(HermitianOperator::zeros(dim), |acc, o| acc.add(&o))
}

fn square(a: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::from_hermitian_part(&(a.matrix() * a.matrix()))
}

/// S^{-1/2+} A_k S^{-1/2+} with S = Σ A_k.
fn normalize_by_sum(dim: usize, ops: &[HermitianOperator]) -> Result<Vec<HermitianOperator>> {
    let s = sum_ops(dim, ops.iter().cloned());
    let dec = s.eig()?;
    if dec.eigenvalues.last().copied().unwrap_or(0.0) <= dec.rank_cutoff() {
        return Err(Error::DegenerateInput(
            "normalizing operator has no positive part".into(),
        ));
    }
    let w = dec.map_positive(|l| l.powf(-0.5));
    Ok(ops.iter().map(|a| a.congruence(w.matrix())).collect())
}

impl Ensemble {
    pub fn new(states: Vec<HermitianOperator>) -> Result<Self> {
        let dim = check_dims(&states)?;
        for s in &states {
            s.check_psd_default()?;
        }
        let total: f64 = states.iter().map(|s| s.trace()).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NormalizationError(format!(
                "state traces sum to {total}, expected 1"
            )));
        }
        Ok(Self { dim, states })
    }

    /// Pure-state ensemble p_k |ψ_k⟩⟨ψ_k| from unit vectors.
    pub fn from_pure(weights: &[f64], vectors: &[Vec<C64>]) -> Result<Self> {
        check_pure_input(weights, vectors)?;
        let states = weights
            .iter()
            .zip(vectors)
            .map(|(&p, v)| HermitianOperator::ket_bra(v).scale(p))
            .collect();
        Self::new(states)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[HermitianOperator] {
        &self.states
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.trace()).collect()
    }

    /// Σ ρ_k².
    pub fn sum_of_squares(&self) -> HermitianOperator {
        sum_ops(self.dim, self.states.iter().map(square))
    }

    pub fn average_state(&self) -> HermitianOperator {
        sum_ops(self.dim, self.states.iter().cloned())
    }

    fn check_elements(&self, elements: &[HermitianOperator]) -> Result<()> {
        if elements.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: elements.len(),
            });
        }
        if let Some(bad) = elements.iter().find(|m| m.dim() != self.dim) {
            return Err(Error::DimensionMismatch(format!(
                "ensemble has dimension {}, measurement element {}",
                self.dim,
                bad.dim()
            )));
        }
        Ok(())
    }
}

fn check_pure_input(weights: &[f64], vectors: &[Vec<C64>]) -> Result<()> {
    if weights.len() != vectors.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            got: vectors.len(),
        });
    }
    if weights.is_empty() {
        return Err(Error::DegenerateInput("no states given".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::NormalizationError(
            "weights must be non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NormalizationError(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch(
                "vectors of different lengths".into(),
            ));
        }
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NormalizationError(format!(
                "vector has norm {norm}, expected 1"
            )));
        }
    }
    Ok(())
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self> {
        let dim = check_dims(&elements)?;
        for m in &elements {
            m.check_psd_default()?;
        }
        let excess = sum_ops(dim, elements.iter().cloned()).max_eigenvalue()? - 1.0;
        if excess > NORMALIZATION_TOL {
            return Err(Error::NormalizationError(format!(
                "measurement elements sum above identity by {excess:.3e}"
            )));
        }
        Ok(Self { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<HermitianOperator> {
        self.elements
    }

    /// Largest entrywise difference between corresponding elements.
    pub fn max_abs_diff(&self, other: &Povm) -> f64 {
        self.elements
            .iter()
            .zip(&other.elements)
            .map(|(a, b)| a.matrix().max_abs_diff(b.matrix()))
            .fold(0.0, f64::max)
    }
}

impl GeneralizedMeasurement {
    /// Factors E_k; each must have `dim` columns.
    pub fn new(factors: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = factors
            .first()
            .ok_or_else(|| Error::DegenerateInput("empty factor list".into()))?
            .cols();
        if factors.iter().any(|f| f.cols() != dim) {
            return Err(Error::DimensionMismatch(
                "measurement factors act on different spaces".into(),
            ));
        }
        if factors.iter().any(|f| !f.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { dim, factors })
    }

    /// The guess E_k = 1 for every outcome. Not a POVM for m > 1.
    pub fn identity(dim: usize, outcomes: usize) -> Self {
        Self {
            dim,
            factors: vec![ComplexMatrix::identity(dim); outcomes],
        }
    }

    /// E_k = √M_k.
    pub fn from_povm(povm: &Povm) -> Result<Self> {
        let factors = povm
            .elements
            .iter()
            .map(|m| m.sqrt().map(HermitianOperator::into_matrix))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: povm.dim,
            factors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[ComplexMatrix] {
        &self.factors
    }

    /// E_k†E_k without the Σ ≤ 1 check.
    pub fn elements(&self) -> Vec<HermitianOperator> {
        self.factors
            .iter()
            .map(|e| HermitianOperator::from_hermitian_part(&(&e.adjoint() * e)))
            .collect()
    }

    pub fn to_povm(&self) -> Result<Povm> {
        Povm::new(self.elements())
    }
}

/// Tr Σ M_k ρ_k. Any deficit Σ M_k < 1 counts as failure.
pub fn p_succ(e: &Ensemble, m: &Povm) -> Result<f64> {
    p_succ_elements(e, &m.elements)
}

/// Same as [`p_succ`] for operators that need not form a POVM.
pub fn p_succ_elements(e: &Ensemble, elements: &[HermitianOperator]) -> Result<f64> {
    e.check_elements(elements)?;
    Ok(e.states
        .iter()
        .zip(elements)
        .map(|(r, m)| r.trace_product(m))
        .sum())
}

/// ⟨F,G⟩ = Tr Σ F_k†G_kρ_k.
pub fn ensemble_inner_product(
    e: &Ensemble,
    f: &GeneralizedMeasurement,
    g: &GeneralizedMeasurement,
) -> Result<C64> {
    if f.len() != e.len() || g.len() != e.len() {
        return Err(Error::LengthMismatch {
            expected: e.len(),
            got: if f.len() != e.len() { f.len() } else { g.len() },
        });
    }
    if f.dim != e.dim || g.dim != e.dim {
        return Err(Error::DimensionMismatch(
            "measurement and ensemble dimensions differ".into(),
        ));
    }
    let mut acc = ZERO;
    for ((fk, gk), rho) in f.factors.iter().zip(&g.factors).zip(&e.states) {
        if fk.rows() != gk.rows() {
            return Err(Error::DimensionMismatch(
                "paired factors have different output spaces".into(),
            ));
        }
        acc += (&(&fk.adjoint() * gk) * rho.matrix()).trace();
    }
    Ok(acc)
}

/// ‖G‖ = √⟨G,G⟩.
pub fn ensemble_seminorm(e: &Ensemble, g: &GeneralizedMeasurement) -> Result<f64> {
    Ok(ensemble_inner_product(e, g, g)?.re.max(0.0).sqrt())
}

/// One JRF step: M_k ↦ S^{-1/2+} ρ_k M_k ρ_k S^{-1/2+}, S = Σ ρ_ℓ M_ℓ ρ_ℓ.
pub fn jrf_iterate(e: &Ensemble, m: &Povm) -> Result<Povm> {
    jrf_iterate_elements(e, &m.elements)
}

/// JRF step from arbitrary PSD operators (e.g. the all-identity guess).
pub fn jrf_iterate_elements(e: &Ensemble, elements: &[HermitianOperator]) -> Result<Povm> {
    e.check_elements(elements)?;
    let sandwiched: Vec<HermitianOperator> = e
        .states
        .iter()
        .zip(elements)
        .map(|(r, m)| m.congruence(r.matrix()))
        .collect();
    Povm::new(normalize_by_sum(e.dim, &sandwiched)?)
}

/// Generalized-measurement step E_k ↦ E_k ρ_k S^{-1/2+}.
pub fn gm_iterate(e: &Ensemble, g: &GeneralizedMeasurement) -> Result<GeneralizedMeasurement> {
    if g.len() != e.len() {
        return Err(Error::LengthMismatch {
            expected: e.len(),
            got: g.len(),
        });
    }
    if g.dim != e.dim {
        return Err(Error::DimensionMismatch(
            "measurement and ensemble dimensions differ".into(),
        ));
    }
    let s = gm_normalizer(e, g);
    let dec = s.eig()?;
    if dec.eigenvalues.last().copied().unwrap_or(0.0) <= dec.rank_cutoff() {
        return Err(Error::DegenerateInput("zero success mass".into()));
    }
    let w = dec.map_positive(|l| l.powf(-0.5));
    let factors = g
        .factors
        .iter()
        .zip(&e.states)
        .map(|(f, r)| &(f * r.matrix()) * w.matrix())
        .collect();
    Ok(GeneralizedMeasurement {
        dim: g.dim,
        factors,
    })
}

/// S = Σ ρ_k E_k†E_k ρ_k.
fn gm_normalizer(e: &Ensemble, g: &GeneralizedMeasurement) -> HermitianOperator {
    sum_ops(
        e.dim,
        g.elements()
            .iter()
            .zip(&e.states)
            .map(|(m, r)| m.congruence(r.matrix())),
    )
}

/// ⟨G⁺, G⟩ = Tr √S, the directional lower bound before normalization.
pub fn gm_lambda(e: &Ensemble, g: &GeneralizedMeasurement) -> Result<f64> {
    Ok(gm_normalizer(e, g).sqrt()?.trace())
}

/// M_k = (Σρ²)^{-1/2+} ρ_k² (Σρ²)^{-1/2+}.
pub fn quadratic_measurement(e: &Ensemble) -> Result<Povm> {
    let squares: Vec<HermitianOperator> = e.states.iter().map(square).collect();
    Povm::new(normalize_by_sum(e.dim, &squares)?)
}

/// M_k = (Σρ)^{-1/2+} ρ_k (Σρ)^{-1/2+}.
pub fn pretty_good_measurement(e: &Ensemble) -> Result<Povm> {
    Povm::new(normalize_by_sum(e.dim, &e.states)?)
}

/// Rank-one measurement from e_k = (Σ p²|ψ⟩⟨ψ|)^{-1/2+} p_k ψ_k.
pub fn holevo_pure_measurement(weights: &[f64], vectors: &[Vec<C64>]) -> Result<Povm> {
    check_pure_input(weights, vectors)?;
    let dim = vectors[0].len();
    let s = sum_ops(
        dim,
        weights
            .iter()
            .zip(vectors)
            .map(|(&p, v)| HermitianOperator::ket_bra(v).scale(p * p)),
    );
    let w = s.pseudo_power(-0.5)?;
    let elements = weights
        .iter()
        .zip(vectors)
        .map(|(&p, v)| {
            let ek: Vec<C64> = w.matrix().matvec(v).into_iter().map(|z| z * p).collect();
            HermitianOperator::ket_bra(&ek)
        })
        .collect();
    Povm::new(elements)
}

/// Λ = Tr √(Σρ_k²) together with the success rate of the quadratic
/// measurement; adds the exact optimum for two-state ensembles.
pub fn holevo_curlander_bounds(e: &Ensemble) -> Result<BoundReport> {
    let lambda = e.sum_of_squares().sqrt()?.trace();
    let achieved = p_succ(e, &quadratic_measurement(e)?)?;
    let oracle_optimal = if e.len() == 2 {
        Some(helstrom_optimal(e)?.0)
    } else {
        None
    };
    Ok(BoundReport {
        lambda,
        lambda_sq: lambda * lambda,
        lower: lambda * lambda,
        achieved,
        upper: lambda,
        lambda_cap: 1.0,
        oracle_optimal,
    })
}

/// Exact binary optimum ½(1 + ‖ρ₁ − ρ₂‖₁) and the projective measurement
/// attaining it.
pub fn helstrom_optimal(e: &Ensemble) -> Result<(f64, Povm)> {
    if e.len() != 2 {
        return Err(Error::ArityError {
            expected: 2,
            got: e.len(),
        });
    }
    let diff = e.states[0].sub(&e.states[1]);
    let value = 0.5 * (1.0 + trace_norm(diff.matrix())?);
    let p = diff.positive_projection()?;
    let q = HermitianOperator::identity(e.dim).sub(&p);
    Ok((value, Povm::new(vec![p, q])?))
}

impl BoundReport {
    /// Checks the sandwich and 0 ≤ Λ ≤ cap, with 1e-9 slack relative to the
    /// largest entry.
    pub fn validate(&self) -> Result<()> {
        let values = [
            self.lambda,
            self.lambda_sq,
            self.lower,
            self.achieved,
            self.upper,
            self.lambda_cap,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation("non-finite bound".into()));
        }
        let slack = REPORT_SLACK * values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if self.lambda < -slack || self.lambda > self.lambda_cap + slack {
            return Err(Error::InvariantViolation(format!(
                "lambda {} outside [0, {}]",
                self.lambda, self.lambda_cap
            )));
        }
        // Λ² is itself a lower bound only when the cap is at most one
        let sq_binding = self.lambda_cap <= 1.0 + slack;
        if (sq_binding && self.lambda_sq > self.achieved + slack)
            || self.lower > self.achieved + slack
        {
            return Err(Error::InvariantViolation(format!(
                "lower bound {} exceeds achieved {}",
                self.lower, self.achieved
            )));
        }
        let top = self.oracle_optimal.unwrap_or(self.achieved);
        if self.achieved > top + slack || top > self.upper + slack {
            return Err(Error::InvariantViolation(format!(
                "achieved {} / optimum {} / upper {} out of order",
                self.achieved, top, self.upper
            )));
        }
        Ok(())
    }
}
