//! Channel reversal reached three ways: the direct bounds, the overlap
//! reduction, and both monotone iterations. All must tell the same story.

use qbounds::channel::{entanglement_fidelity, quadratic_recovery, recovery_bounds};
use qbounds::iterate::{overlap_iterate_from_guess, rw_iterate_to_convergence, RwFunctional};
use qbounds::overlap::{overlap_bounds, overlap_value, recovery_instance};
use qbounds::random;

#[test]
fn reductions_agree_on_random_channels() {
    for seed in 0..8u64 {
        let mut rng = random::rng(seed);
        let d = 2 + (seed as usize % 2);
        let a = random::random_channel(&mut rng, d, d, 2);
        let rho = random::random_density(&mut rng, d);

        let direct = recovery_bounds(&a, &rho).unwrap();
        let inst = recovery_instance(&a, &rho).unwrap();
        let via_overlap = overlap_bounds(&inst).unwrap();
        assert!(
            (direct.lambda - via_overlap.lambda).abs() < 1e-9,
            "seed {seed}"
        );

        let qr = quadratic_recovery(&a, &rho).unwrap();
        let fe = entanglement_fidelity(&qr.compose(&a).unwrap(), &rho).unwrap();
        assert!(
            (overlap_value(&inst, &qr).unwrap() - fe).abs() < 1e-9,
            "seed {seed}"
        );

        // both iterations only climb from the quadratic recovery
        let f = RwFunctional::recovery_fidelity(&a, &rho).unwrap();
        let (r, trace) = rw_iterate_to_convergence(&f, &qr, 1e-12, 500).unwrap();
        assert!(trace.check_monotone(1e-12).is_ok());
        let best = entanglement_fidelity(&r.compose(&a).unwrap(), &rho).unwrap();
        assert!(
            best >= fe - 1e-10 && best <= direct.upper + 1e-9,
            "seed {seed}"
        );

        let (u, trace) = overlap_iterate_from_guess(&inst, 1e-12, 500).unwrap();
        assert!(trace.check_monotone(1e-12).is_ok());
        let via_dilation = overlap_value(&inst, &u.to_map().unwrap()).unwrap();
        assert!(
            (via_dilation - best).abs() < 1e-6,
            "seed {seed}: {via_dilation} vs {best}"
        );
    }
}
