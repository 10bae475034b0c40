//! Seeded random instances. The generator is ChaCha8 seeded from a `u64`,
//! so identical seeds give identical instances on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::CpMap;
use crate::measure::{Ensemble, Povm};
use crate::numlin::{ComplexMatrix, HermitianOperator, C64};

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex standard normal (unit variance per real component).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    // explicit row-major draw order keeps the stream independent of storage
    let data: Vec<C64> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    ComplexMatrix::from_fn(rows, cols, |i, j| data[i * cols + j])
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| complex_normal(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Hermitized Ginibre sample (not positive).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianOperator {
    HermitianOperator::from_hermitian_part(&ginibre(rng, d, d))
}

/// G G† for a d×rank Ginibre G, unnormalized.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> HermitianOperator {
    let g = ginibre(rng, d, rank);
    HermitianOperator::from_hermitian_part(&(&g * &g.adjoint()))
}

pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianOperator {
    random_density_rank(rng, d, d)
}

pub fn random_density_rank<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    rank: usize,
) -> HermitianOperator {
    let p = random_psd(rng, d, rank);
    let t = p.trace();
    p.scale(1.0 / t)
}

/// m Ginibre states normalized jointly, so the priors are random too.
pub fn random_ensemble<R: Rng + ?Sized>(rng: &mut R, m: usize, d: usize) -> Ensemble {
    let states: Vec<HermitianOperator> = (0..m).map(|_| random_psd(rng, d, d)).collect();
    let total: f64 = states.iter().map(HermitianOperator::trace).sum();
    Ensemble::new(states.iter().map(|s| s.scale(1.0 / total)).collect())
        .expect("Ginibre ensemble is valid")
}

/// S^{-1/2} A_k S^{-1/2} for random PSD A_k; sums to the identity.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, m: usize, d: usize) -> Povm {
    let parts: Vec<HermitianOperator> = (0..m).map(|_| random_psd(rng, d, d)).collect();
    let s = parts
        .iter()
        .fold(HermitianOperator::zeros(d), |acc, a| acc.add(a));
    let w = s.pseudo_power(-0.5).expect("finite input");
    Povm::new(parts.iter().map(|a| a.congruence(w.matrix())).collect())
        .expect("normalized measurement is valid")
}

/// Polar part of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    random_isometry(rng, d, d)
}

/// V (V†V)^{-1/2} for a rows×cols Ginibre V (rows ≥ cols).
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let v = ginibre(rng, rows, cols);
    let gram = HermitianOperator::from_hermitian_part(&(&v.adjoint() * &v));
    &v * gram.pseudo_power(-0.5).expect("finite input").matrix()
}

/// Channel with `kraus` operators cut from a random isometry.
pub fn random_channel<R: Rng + ?Sized>(
    rng: &mut R,
    din: usize,
    dout: usize,
    kraus: usize,
) -> CpMap {
    let v = random_isometry(rng, dout * kraus, din);
    let ops = (0..kraus)
        .map(|k| ComplexMatrix::from_fn(dout, din, |l, c| v[(k * dout + l, c)]))
        .collect();
    CpMap::new(din, dout, ops).expect("shapes are consistent")
}

/// Random channel followed on the input side by a diagonal contraction, so
/// Σ F†F = D² ≤ 1 (generally trace-decreasing).
pub fn random_operation<R: Rng + ?Sized>(
    rng: &mut R,
    din: usize,
    dout: usize,
    kraus: usize,
) -> CpMap {
    let ch = random_channel(rng, din, dout, kraus);
    let diag: Vec<f64> = (0..din).map(|_| rng.random_range(0.0..1.0)).collect();
    let d = ComplexMatrix::from_real_diagonal(&diag);
    let ops = ch.kraus().iter().map(|f| f * &d).collect();
    CpMap::new(din, dout, ops).expect("shapes are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_reproduce_instances() {
        let a = random_ensemble(&mut rng(9), 3, 2);
        let b = random_ensemble(&mut rng(9), 3, 2);
        assert_eq!(a, b);
        let c = random_ensemble(&mut rng(10), 3, 2);
        assert_ne!(a, c);
    }

    #[test]
    fn generated_objects_are_valid() {
        let mut r = rng(11);
        let u = random_unitary(&mut r, 3);
        assert!((&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        let p = random_povm(&mut r, 4, 3);
        let sum = p
            .elements()
            .iter()
            .fold(HermitianOperator::zeros(3), |a, m| a.add(m));
        assert!(sum.matrix().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        let op = random_operation(&mut r, 3, 2, 2);
        assert!(op.is_quantum_operation());
        let rho = random_density_rank(&mut r, 4, 2);
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        let ev = rho.eig().unwrap().eigenvalues;
        assert!(ev[1].abs() < 1e-12 && ev[2] > 1e-6);
    }
}
