//! Directional iteration: the JRF measurement step, the Reimpell-Werner step
//! on Choi matrices and the polar-part step for overlap dilations, all
//! sharing one convergence loop.
//!
//! Every sequence here is monotone; none is guaranteed to reach the optimum,
//! so the final value is only ever a lower estimate.

use crate::channel::{map_from_choi, ChoiMatrix, CpMap, StinespringDilation};
use crate::error::{Error, Result};
use crate::measure::{jrf_iterate_elements, p_succ_elements, Ensemble, Povm};
use crate::numlin::{
    double_ket, partial_trace, trace_norm, ComplexMatrix, HermitianOperator, TensorFactorization,
    C64, ZERO,
};
use crate::overlap::{hat, overlap_value, recovery_instance, OverlapInstance};

/// Why a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIters,
    Degenerate,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Tolerance => "tolerance",
            StopReason::MaxIters => "max_iters",
            StopReason::Degenerate => "degenerate",
        }
    }
}

/// `seminorms` holds ‖g‖ for every feasible element visited (an infeasible
/// starting guess is skipped). `lambda_values[i]` is Λ(g) = ⟨g⁺,g⟩/‖g‖ for
/// the element iterated at step i, so ‖g⁺‖ ≥ Λ(g).
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub seminorms: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub steps: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl IterationTrace {
    /// Largest single-step drop of the seminorm (0 for a monotone trace).
    pub fn worst_decrease(&self) -> f64 {
        self.seminorms
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    pub fn check_monotone(&self, slack: f64) -> Result<()> {
        let drop = self.worst_decrease();
        if drop > slack {
            return Err(Error::InvariantViolation(format!(
                "seminorm decreased by {drop:e} in one step"
            )));
        }
        Ok(())
    }

    pub fn final_seminorm(&self) -> Option<f64> {
        self.seminorms.last().copied()
    }
}

fn check_run(tol: f64, max_iters: usize) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::DegenerateInput(
            "max_iters must be at least 1".into(),
        ));
    }
    Ok(())
}

/// The shared loop. `value` is the squared seminorm; `step` returns the
/// successor together with ⟨g⁺, g⟩. Stops once successive values differ by
/// less than `tol`.
fn drive<T>(
    start: T,
    start_feasible: bool,
    tol: f64,
    max_iters: usize,
    mut step: impl FnMut(&T) -> Result<(T, f64)>,
    value: impl Fn(&T) -> Result<f64>,
) -> Result<(T, IterationTrace)> {
    check_run(tol, max_iters)?;
    let mut trace = IterationTrace {
        seminorms: Vec::new(),
        lambda_values: Vec::new(),
        steps: 0,
        converged: false,
        stop_reason: StopReason::MaxIters,
    };
    let mut current_value = value(&start)?;
    let mut prev = None;
    if start_feasible {
        trace.seminorms.push(current_value.max(0.0).sqrt());
        prev = Some(current_value);
    }
    let mut current = start;
    for _ in 0..max_iters {
        let (next, inner) = match step(&current) {
            Ok(x) => x,
            Err(Error::DegenerateInput(_)) if trace.steps > 0 => {
                trace.stop_reason = StopReason::Degenerate;
                break;
            }
            Err(e) => return Err(e),
        };
        let norm = current_value.max(0.0).sqrt();
        trace
            .lambda_values
            .push(if norm > 0.0 { inner / norm } else { 0.0 });
        trace.steps += 1;
        current = next;
        current_value = value(&current)?;
        trace.seminorms.push(current_value.max(0.0).sqrt());
        if let Some(p) = prev {
            if (current_value - p).abs() < tol {
                trace.converged = true;
                trace.stop_reason = StopReason::Tolerance;
                break;
            }
        }
        prev = Some(current_value);
    }
    Ok((current, trace))
}

// ---------------------------------------------------------------- JRF

fn jrf_step(e: &Ensemble, elements: &[HermitianOperator]) -> Result<(Vec<HermitianOperator>, f64)> {
    let next = jrf_iterate_elements(e, elements)?;
    let s = e
        .states()
        .iter()
        .zip(elements)
        .fold(HermitianOperator::zeros(e.dim()), |acc, (r, m)| {
            acc.add(&m.congruence(r.matrix()))
        });
    Ok((next.into_elements(), s.sqrt()?.trace()))
}

/// JRF iteration from a POVM until the success rate moves by less than `tol`.
pub fn iterate_povm_to_convergence(
    e: &Ensemble,
    start: &Povm,
    tol: f64,
    max_iters: usize,
) -> Result<(Povm, IterationTrace)> {
    if start.len() != e.len() {
        return Err(Error::LengthMismatch {
            expected: e.len(),
            got: start.len(),
        });
    }
    run_jrf(e, start.elements().to_vec(), true, tol, max_iters)
}

/// Same, from the all-identity guess; the first iterate is the quadratic
/// measurement and Λ of the guess is the Holevo-Curlander Λ.
pub fn iterate_povm_from_identity(
    e: &Ensemble,
    tol: f64,
    max_iters: usize,
) -> Result<(Povm, IterationTrace)> {
    let guess = vec![HermitianOperator::identity(e.dim()); e.len()];
    run_jrf(e, guess, false, tol, max_iters)
}

fn run_jrf(
    e: &Ensemble,
    start: Vec<HermitianOperator>,
    feasible: bool,
    tol: f64,
    max_iters: usize,
) -> Result<(Povm, IterationTrace)> {
    let (elements, trace) = drive(
        start,
        feasible,
        tol,
        max_iters,
        |m| jrf_step(e, m),
        |m| p_succ_elements(e, m),
    )?;
    Ok((Povm::new(elements)?, trace))
}

// ------------------------------------------------------ Reimpell-Werner

/// f(R) = Tr(F R̃) for PSD F on L ⊗ K*, R̃ the Choi matrix of R: K → L.
#[derive(Clone, Debug)]
pub struct RwFunctional {
    dim_in: usize,
    dim_out: usize,
    f: HermitianOperator,
}

impl RwFunctional {
    pub fn new(dim_in: usize, dim_out: usize, f: HermitianOperator) -> Result<Self> {
        if f.dim() != dim_in * dim_out {
            return Err(Error::DimensionMismatch(format!(
                "functional of size {} for maps {dim_in} → {dim_out}",
                f.dim()
            )));
        }
        f.check_psd_default()?;
        Ok(Self { dim_in, dim_out, f })
    }

    /// F = |1⟩⟩⟨⟨1|, so f(R) = d² F_e(1/d, R).
    pub fn channel_fidelity(d: usize) -> Result<Self> {
        let one = double_ket(&ComplexMatrix::identity(d)).column_entries(0);
        Self::new(d, d, HermitianOperator::ket_bra(&one))
    }

    /// F[(l',k'),(l,k)] = Σ conj φ[l,h] μ[(k,h),(k',h')] φ[l',h'], so that
    /// f(R) is the overlap ⟨φ|(R⊗1)(μ)|φ⟩.
    pub fn from_overlap(inst: &OverlapInstance) -> Result<Self> {
        let (dk, dh, dl) = (inst.dim_k(), inst.dim_h(), inst.dim_l());
        let phi = inst.phi();
        let mu = inst.mu().matrix();
        let f = ComplexMatrix::from_fn(dl * dk, dl * dk, |row, col| {
            let (lp, kp) = (row / dk, row % dk);
            let (l, k) = (col / dk, col % dk);
            let mut acc = ZERO;
            for h in 0..dh {
                for hp in 0..dh {
                    acc +=
                        phi[l * dh + h].conj() * mu[(k * dh + h, kp * dh + hp)] * phi[lp * dh + hp];
                }
            }
            acc
        });
        Self::new(dk, dl, HermitianOperator::from_hermitian_part(&f))
    }

    /// f(R) = F_e(ρ, R∘A).
    pub fn recovery_fidelity(map: &CpMap, rho: &HermitianOperator) -> Result<Self> {
        Self::from_overlap(&recovery_instance(map, rho)?)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &HermitianOperator {
        &self.f
    }

    fn check_map(&self, r: &CpMap) -> Result<()> {
        if r.dim_in() != self.dim_in || r.dim_out() != self.dim_out {
            return Err(Error::DimensionMismatch(format!(
                "functional acts on maps {} → {}, got {} → {}",
                self.dim_in,
                self.dim_out,
                r.dim_in(),
                r.dim_out()
            )));
        }
        Ok(())
    }

    pub fn value(&self, r: &CpMap) -> Result<f64> {
        self.check_map(r)?;
        Ok(self.f.trace_product(r.choi().matrix()))
    }
}

/// One step plus ⟨U⁺,U⟩ = Tr √(Tr_L F R̃ F).
fn rw_step(f: &RwFunctional, r: &CpMap) -> Result<(CpMap, f64)> {
    f.check_map(r)?;
    let choi = r.choi();
    let frf = HermitianOperator::from_hermitian_part(
        &(&(f.f.matrix() * choi.matrix().matrix()) * f.f.matrix()),
    );
    let lk = TensorFactorization::new(vec![f.dim_out, f.dim_in])?;
    let marginal = HermitianOperator::from_hermitian_part(&partial_trace(frf.matrix(), &lk, &[1])?);
    let dec = marginal.eig()?;
    if dec.eigenvalues.last().copied().unwrap_or(0.0) <= dec.rank_cutoff() {
        return Err(Error::DegenerateInput("F R̃ F vanishes".into()));
    }
    let inner = dec.map_positive(f64::sqrt).trace();
    let gamma =
        ComplexMatrix::identity(f.dim_out).kron(dec.map_positive(|l| l.powf(-0.5)).matrix());
    let next = ChoiMatrix::new(f.dim_in, f.dim_out, frf.congruence(&gamma))?;
    Ok((map_from_choi(&next)?, inner))
}

/// R̃ ↦ Γ^{-1/2+} F R̃ F Γ^{-1/2+}, Γ = 1_L ⊗ Tr_L(F R̃ F).
pub fn rw_iterate(f: &RwFunctional, r: &CpMap) -> Result<CpMap> {
    Ok(rw_step(f, r)?.0)
}

pub fn rw_iterate_to_convergence(
    f: &RwFunctional,
    start: &CpMap,
    tol: f64,
    max_iters: usize,
) -> Result<(CpMap, IterationTrace)> {
    f.check_map(start)?;
    drive(
        start.clone(),
        start.is_quantum_operation(),
        tol,
        max_iters,
        |r| rw_step(f, r),
        |r| f.value(r),
    )
}

// -------------------------------------------------------------- overlap

fn check_dilation(inst: &OverlapInstance, u: &StinespringDilation) -> Result<()> {
    if u.dim_in != inst.dim_k() || u.dim_out != inst.dim_l() {
        return Err(Error::DimensionMismatch(format!(
            "dilation must map {} → {}⊗E, got {} → {}⊗E",
            inst.dim_k(),
            inst.dim_l(),
            u.dim_in,
            u.dim_out
        )));
    }
    if u.matrix.rows() != u.dim_out * u.dim_env || u.matrix.cols() != u.dim_in {
        return Err(Error::DimensionMismatch(
            "dilation matrix has the wrong shape".into(),
        ));
    }
    Ok(())
}

/// Q with Re Tr W†Q = ⟨W, U⟩ in the overlap semi-inner product:
/// Q[(l,e),k] = Σ φ[l,h] conj φ[l',h'] U[(l',e),k'] μ[(k',h'),(k,h)].
pub fn overlap_direction(inst: &OverlapInstance, u: &StinespringDilation) -> Result<ComplexMatrix> {
    check_dilation(inst, u)?;
    let (dk, dh, dl, de) = (inst.dim_k(), inst.dim_h(), inst.dim_l(), u.dim_env);
    let phi = inst.phi();
    let mu = inst.mu().matrix();
    // a[e, (k',h')] = Σ_l' conj φ[l',h'] U[(l',e),k']
    let a = ComplexMatrix::from_fn(de, dk * dh, |e, kh| {
        let (k, h) = (kh / dh, kh % dh);
        (0..dl)
            .map(|l| phi[l * dh + h].conj() * u.matrix[(l * de + e, k)])
            .sum::<C64>()
    });
    let b = &a * mu;
    Ok(ComplexMatrix::from_fn(dl * de, dk, |row, k| {
        let (l, e) = (row / de, row % de);
        (0..dh).map(|h| phi[l * dh + h] * b[(e, k * dh + h)]).sum()
    }))
}

fn polar_part(q: &ComplexMatrix) -> Result<ComplexMatrix> {
    let gram = HermitianOperator::from_hermitian_part(&(&q.adjoint() * q));
    let dec = gram.eig()?;
    if dec.eigenvalues.last().copied().unwrap_or(0.0) <= dec.rank_cutoff() {
        return Err(Error::DegenerateInput(
            "overlap direction Q vanishes".into(),
        ));
    }
    Ok(q * dec.map_positive(|l| l.powf(-0.5)).matrix())
}

fn overlap_step(
    inst: &OverlapInstance,
    u: &StinespringDilation,
) -> Result<(StinespringDilation, f64)> {
    let q = overlap_direction(inst, u)?;
    let next = StinespringDilation {
        dim_in: u.dim_in,
        dim_out: u.dim_out,
        dim_env: u.dim_env,
        matrix: polar_part(&q)?,
    };
    Ok((next, trace_norm(&q)?))
}

fn dilation_overlap(inst: &OverlapInstance, u: &StinespringDilation) -> Result<f64> {
    overlap_value(inst, &u.to_map()?)
}

/// U ↦ Q(Q†Q)^{-1/2+}. Null directions of Q†Q are dropped, so the result is
/// a partial isometry.
pub fn overlap_iterate(
    inst: &OverlapInstance,
    u: &StinespringDilation,
) -> Result<StinespringDilation> {
    check_dilation(inst, u)?;
    if u.norm()? > 1.0 + 1e-10 {
        return Err(Error::DegenerateInput(
            "starting dilation is not a contraction".into(),
        ));
    }
    Ok(overlap_step(inst, u)?.0)
}

/// Canonical dilation of R^G(ρ) = φ_L^{-1+} Tr ρ, the small-angle guess.
/// Usually not a contraction; one step from it gives the quadratic
/// overlapper.
pub fn small_angle_guess(inst: &OverlapInstance) -> Result<StinespringDilation> {
    let phi_l = hat(inst)?.phi_l;
    let dec = phi_l.eig()?;
    let cutoff = dec.rank_cutoff();
    let (dk, dl) = (inst.dim_k(), inst.dim_l());
    let mut kraus = Vec::new();
    for (j, &lam) in dec.eigenvalues.iter().enumerate() {
        if lam <= cutoff {
            continue;
        }
        let v: Vec<C64> = dec.eigenvector(j).iter().map(|z| z / lam.sqrt()).collect();
        for k in 0..dk {
            kraus.push(ComplexMatrix::from_fn(dl, dk, |l, c| {
                if c == k {
                    v[l]
                } else {
                    ZERO
                }
            }));
        }
    }
    CpMap::new(dk, dl, kraus)?.canonical_stinespring()
}

pub fn overlap_iterate_to_convergence(
    inst: &OverlapInstance,
    start: &StinespringDilation,
    tol: f64,
    max_iters: usize,
) -> Result<(StinespringDilation, IterationTrace)> {
    check_dilation(inst, start)?;
    if start.norm()? > 1.0 + 1e-10 {
        return Err(Error::DegenerateInput(
            "starting dilation is not a contraction".into(),
        ));
    }
    drive(
        start.clone(),
        true,
        tol,
        max_iters,
        |u| overlap_step(inst, u),
        |u| dilation_overlap(inst, u),
    )
}

/// Iteration from the small-angle guess; the first recorded seminorm is that
/// of the quadratic overlapper.
pub fn overlap_iterate_from_guess(
    inst: &OverlapInstance,
    tol: f64,
    max_iters: usize,
) -> Result<(StinespringDilation, IterationTrace)> {
    drive(
        small_angle_guess(inst)?,
        false,
        tol,
        max_iters,
        |u| overlap_step(inst, u),
        |u| dilation_overlap(inst, u),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{entanglement_fidelity, quadratic_recovery};
    use crate::measure::{
        helstrom_optimal, holevo_curlander_bounds, p_succ, pretty_good_measurement,
        quadratic_measurement,
    };
    use crate::numlin::ONE;
    use crate::overlap::{ensemble_to_overlap, overlap_bounds, quadratic_overlapper};
    use crate::random;
    use proptest::prelude::*;

    fn basis(d: usize, i: usize) -> Vec<C64> {
        (0..d).map(|j| if i == j { ONE } else { ZERO }).collect()
    }

    fn random_instance(seed: u64, dk: usize, dh: usize, dl: usize) -> OverlapInstance {
        let mut rng = random::rng(seed);
        let mu = random::random_psd(&mut rng, dk * dh, dk * dh);
        let phi = random::random_pure_state(&mut rng, dl * dh);
        OverlapInstance::new(dk, dh, dl, mu, phi).unwrap()
    }

    #[test]
    fn perfect_povm_is_a_fixed_point() {
        let e = Ensemble::from_pure(&[0.5, 0.5], &[basis(2, 0), basis(2, 1)]).unwrap();
        let start = quadratic_measurement(&e).unwrap();
        let (end, trace) = iterate_povm_to_convergence(&e, &start, 1e-10, 100).unwrap();
        assert_eq!(trace.steps, 1);
        assert!(trace.converged);
        assert_eq!(trace.stop_reason, StopReason::Tolerance);
        assert!(end.max_abs_diff(&start) < 1e-12);
        assert!((trace.seminorms[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_start_gives_quadratic_measurement_first() {
        let mut rng = random::rng(21);
        let e = random::random_ensemble(&mut rng, 3, 2);
        let (first, trace) = iterate_povm_from_identity(&e, 1e-10, 1).unwrap();
        assert!(first.max_abs_diff(&quadratic_measurement(&e).unwrap()) < 1e-12);
        let qw = p_succ(&e, &first).unwrap();
        assert!((trace.seminorms[0] - qw.sqrt()).abs() < 1e-12);
        // Λ of the identity guess is the Holevo-Curlander Λ
        let hc = holevo_curlander_bounds(&e).unwrap();
        assert!((trace.lambda_values[0] - hc.lambda).abs() < 1e-12);
    }

    #[test]
    fn qubit_three_states_dominate_one_shot_measurements() {
        let mut rng = random::rng(22);
        let e = random::random_ensemble(&mut rng, 3, 2);
        let (end, trace) = iterate_povm_from_identity(&e, 1e-14, 200).unwrap();
        trace.check_monotone(1e-12).unwrap();
        let p = p_succ(&e, &end).unwrap();
        let qw = p_succ(&e, &quadratic_measurement(&e).unwrap()).unwrap();
        let pgm = p_succ(&e, &pretty_good_measurement(&e).unwrap()).unwrap();
        assert!(p >= qw.max(pgm) - 1e-12);
    }

    #[test]
    fn two_state_limit_is_helstrom() {
        let mut rng = random::rng(23);
        for _ in 0..5 {
            let e = random::random_ensemble(&mut rng, 2, 3);
            let (end, trace) = iterate_povm_from_identity(&e, 1e-15, 200).unwrap();
            let opt = helstrom_optimal(&e).unwrap().0;
            assert!((p_succ(&e, &end).unwrap() - opt).abs() < 1e-6);
            // G1: optimum ≥ ‖g⁺‖ ≥ Λ(g)
            for (i, lam) in trace.lambda_values.iter().enumerate() {
                assert!(trace.seminorms[i] >= lam - 1e-12);
                assert!(opt.sqrt() >= trace.seminorms[i] - 1e-12);
            }
        }
    }

    #[test]
    fn bad_run_parameters() {
        let e = Ensemble::from_pure(&[1.0], &[basis(2, 0)]).unwrap();
        assert!(iterate_povm_from_identity(&e, 0.0, 10).is_err());
        assert!(iterate_povm_from_identity(&e, 1e-10, 0).is_err());
        let zero = Povm::new(vec![HermitianOperator::zeros(2)]).unwrap();
        assert!(matches!(
            iterate_povm_to_convergence(&e, &zero, 1e-10, 10),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn rw_identity_is_fixed() {
        let f = RwFunctional::channel_fidelity(3).unwrap();
        let id = CpMap::identity(3);
        let next = rw_iterate(&f, &id).unwrap();
        assert!(next.choi().max_abs_diff(&id.choi()) < 1e-12);
        assert!((f.value(&id).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn rw_channel_fidelity_climbs() {
        let mut rng = random::rng(24);
        let f = RwFunctional::channel_fidelity(2).unwrap();
        let start = random::random_channel(&mut rng, 2, 2, 3);
        let (end, trace) = rw_iterate_to_convergence(&f, &start, 1e-300, 50).unwrap();
        assert_eq!(trace.steps, 50);
        trace.check_monotone(1e-12).unwrap();
        assert!(end.is_quantum_operation());
        assert!(trace.final_seminorm().unwrap() > trace.seminorms[0]);
    }

    #[test]
    fn rw_recovery_beats_quadratic_recovery() {
        for (p, d) in [(0.5, 2usize), (0.3, 3)] {
            let a = CpMap::depolarizing(p, d).unwrap();
            let rho = HermitianOperator::identity(d).scale(1.0 / d as f64);
            let f = RwFunctional::recovery_fidelity(&a, &rho).unwrap();
            let qr = quadratic_recovery(&a, &rho).unwrap();
            let fe_qr = entanglement_fidelity(&qr.compose(&a).unwrap(), &rho).unwrap();
            assert!((f.value(&qr).unwrap() - fe_qr).abs() < 1e-12);
            let (end, _) = rw_iterate_to_convergence(&f, &qr, 1e-12, 500).unwrap();
            assert!(f.value(&end).unwrap() >= fe_qr - 1e-6);
        }
    }

    #[test]
    fn rw_zero_functional_is_degenerate() {
        let f = RwFunctional::new(2, 2, HermitianOperator::zeros(4)).unwrap();
        assert!(matches!(
            rw_iterate(&f, &CpMap::identity(2)),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn overlap_inner_product_matches_value() {
        let mut rng = random::rng(25);
        let inst = random_instance(26, 2, 3, 2);
        let u = random::random_operation(&mut rng, 2, 2, 3)
            .canonical_stinespring()
            .unwrap();
        let q = overlap_direction(&inst, &u).unwrap();
        let inner = u.matrix.hs_inner(&q).re;
        assert!((inner - dilation_overlap(&inst, &u).unwrap()).abs() < 1e-12);
        let next = overlap_iterate(&inst, &u).unwrap();
        assert!((next.matrix.hs_inner(&q).re - trace_norm(&q).unwrap()).abs() < 1e-10);
        assert!(next.norm().unwrap() <= 1.0 + 1e-10);
    }

    #[test]
    fn guess_iterate_is_quadratic_overlapper() {
        for seed in 0..6 {
            let inst = random_instance(seed, 2, 2 + seed as usize % 2, 3);
            let (u, trace) = overlap_iterate_from_guess(&inst, 1e-10, 1).unwrap();
            let qo = quadratic_overlapper(&inst).unwrap();
            assert!(u.to_map().unwrap().choi().max_abs_diff(&qo.choi()) < 1e-9);
            let rep = overlap_bounds(&inst).unwrap();
            assert!((trace.seminorms[0].powi(2) - rep.achieved).abs() < 1e-9);
        }
    }

    #[test]
    fn guess_iterate_matches_quadratic_measurement() {
        let mut rng = random::rng(27);
        let e = random::random_ensemble(&mut rng, 3, 2);
        let inst = ensemble_to_overlap(&e).unwrap();
        let (_, trace) = overlap_iterate_from_guess(&inst, 1e-10, 1).unwrap();
        let qw = p_succ(&e, &quadratic_measurement(&e).unwrap()).unwrap();
        assert!((3.0 * trace.seminorms[0].powi(2) - qw).abs() < 1e-9);
    }

    #[test]
    fn perfectly_overlappable_optimum_is_fixed() {
        let mut rng = random::rng(28);
        let phi = random::random_pure_state(&mut rng, 9);
        let inst = OverlapInstance::new(3, 3, 3, HermitianOperator::ket_bra(&phi), phi).unwrap();
        let id = CpMap::identity(3).canonical_stinespring().unwrap();
        let next = overlap_iterate(&inst, &id).unwrap();
        assert!(
            next.to_map()
                .unwrap()
                .choi()
                .max_abs_diff(&CpMap::identity(3).choi())
                < 1e-10
        );

        // Schmidt rank 2 < dim K: the step drops the unused direction of K,
        // so only the (optimal) value is preserved
        let narrow = random::random_pure_state(&mut rng, 6);
        let inst2 =
            OverlapInstance::new(3, 2, 3, HermitianOperator::ket_bra(&narrow), narrow).unwrap();
        let next = overlap_iterate(&inst2, &id).unwrap();
        assert!((dilation_overlap(&inst2, &next).unwrap() - 1.0).abs() < 1e-10);
        let (_, trace) = overlap_iterate_from_guess(&inst, 1e-12, 20).unwrap();
        for (i, lam) in trace.lambda_values.iter().enumerate() {
            assert!(1.0 >= trace.seminorms[i] - 1e-12 && trace.seminorms[i] >= lam - 1e-12);
        }
    }

    #[test]
    fn non_contraction_start_rejected() {
        let inst = random_instance(29, 2, 2, 2);
        let mut u = CpMap::identity(2).canonical_stinespring().unwrap();
        u.matrix = u.matrix.scale_real(2.0);
        assert!(overlap_iterate(&inst, &u).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn jrf_monotone(seed in any::<u64>(), m in 2usize..6, d in 1usize..5) {
            let mut rng = random::rng(seed);
            let e = random::random_ensemble(&mut rng, m, d);
            let start = random::random_povm(&mut rng, m, d);
            let (end, trace) = iterate_povm_to_convergence(&e, &start, 1e-300, 50).unwrap();
            prop_assert!(trace.check_monotone(1e-12).is_ok(), "{:e}", trace.worst_decrease());
            prop_assert!(p_succ(&e, &end).unwrap() >= p_succ(&e, &start).unwrap() - 1e-12);
        }

        #[test]
        fn rw_monotone(seed in any::<u64>(), d in 1usize..4) {
            let mut rng = random::rng(seed);
            let f = RwFunctional::new(d, d, random::random_psd(&mut rng, d * d, d * d)).unwrap();
            let start = random::random_channel(&mut rng, d, d, 2);
            let (end, trace) = rw_iterate_to_convergence(&f, &start, 1e-300, 30).unwrap();
            prop_assert!(trace.check_monotone(1e-12).is_ok(), "{:e}", trace.worst_decrease());
            prop_assert!(end.is_quantum_operation());
        }

        #[test]
        fn overlap_monotone(seed in any::<u64>(), dk in 1usize..4, dh in 1usize..4, dl in 1usize..4) {
            let mut rng = random::rng(seed);
            let inst = random_instance(seed ^ 0xabc, dk, dh, dl);
            let start = random::random_operation(&mut rng, dk, dl, 2).canonical_stinespring().unwrap();
            let (end, trace) = overlap_iterate_to_convergence(&inst, &start, 1e-300, 30).unwrap();
            prop_assert!(trace.check_monotone(1e-12 * inst.mu().trace().max(1.0)).is_ok(), "{:e}", trace.worst_decrease());
            prop_assert!(end.norm().unwrap() <= 1.0 + 1e-9);
        }
    }
}
