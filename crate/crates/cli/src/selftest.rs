//! Reduced-size invariant suites, runnable from the binary.

use qbounds::channel::{
    barnum_knill_recovery, entanglement_fidelity, quadratic_recovery, recovery_bounds,
    transpose_channel, CpMap,
};
use qbounds::iterate::{
    iterate_povm_to_convergence, overlap_iterate_to_convergence, rw_iterate_to_convergence,
    RwFunctional,
};
use qbounds::measure::{
    helstrom_optimal, holevo_curlander_bounds, p_succ, pretty_good_measurement,
};
use qbounds::numlin::{partial_trace, HermitianOperator};
use qbounds::overlap::{
    ensemble_to_overlap, min_entropy_bounds, overlap_bounds, overlap_lambda, overlap_value,
    OverlapInstance,
};
use qbounds::random;
use serde::Serialize;

use crate::error::CliError;
use crate::report::{Cell, Rendered, Table};
use crate::specs;

const SLACK: f64 = 1e-9;

#[derive(Serialize)]
struct SuiteResult {
    name: &'static str,
    checks: usize,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct SelftestOutput {
    suites: Vec<SuiteResult>,
    passed: bool,
}

struct Suite {
    checks: usize,
}

impl Suite {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
        self.checks += 1;
        if ok {
            Ok(())
        } else {
            Err(what())
        }
    }
}

fn err(e: qbounds::Error) -> String {
    e.to_string()
}

fn discrimination(s: &mut Suite, seed: u64, fault: bool) -> Result<(), String> {
    let zp = specs::ensemble("zero-plus", seed).map_err(|e| e.to_string())?;
    let r = holevo_curlander_bounds(&zp).map_err(err)?;
    let target = 0.5 * (1.0 + 0.5f64.sqrt());
    s.check(
        (r.lambda_sq - target).abs() < SLACK && (r.achieved - target).abs() < SLACK,
        || {
            format!(
                "zero-plus fixture: Λ² = {}, QW = {}",
                r.lambda_sq, r.achieved
            )
        },
    )?;
    for i in 0..20 {
        let mut rng = random::rng(seed.wrapping_add(i));
        let e = random::random_ensemble(&mut rng, 2, 2 + (i as usize % 3));
        let mut rep = holevo_curlander_bounds(&e).map_err(err)?;
        if fault && i == 0 {
            rep.achieved += 0.5;
        }
        s.check(rep.validate().is_ok(), || {
            format!("ensemble {i}: sandwich broken: {rep:?}")
        })?;
        let opt = helstrom_optimal(&e).map_err(err)?.0;
        let pgm = p_succ(&e, &pretty_good_measurement(&e).map_err(err)?).map_err(err)?;
        s.check(
            pgm >= opt * opt - SLACK && rep.lambda_sq >= opt * opt - SLACK,
            || format!("ensemble {i}: squared-optimum tightness broken"),
        )?;
    }
    Ok(())
}

fn recovery(s: &mut Suite, seed: u64) -> Result<(), String> {
    for d in [2usize, 3] {
        let mixed = HermitianOperator::identity(d).scale(1.0 / d as f64);
        for k in 1..10 {
            let p = k as f64 / 10.0;
            let f = p * p / ((1.0 - p).powi(2) * (d * d) as f64 + (2.0 - p) * p);
            let a = CpMap::depolarizing(p, d).map_err(err)?;
            let r = quadratic_recovery(&a, &mixed).map_err(err)?;
            let diff = r
                .choi()
                .max_abs_diff(&CpMap::depolarizing(f, d).map_err(err)?.choi());
            s.check(diff < SLACK, || {
                format!("depolarizing p={p} d={d}: Choi off by {diff:e}")
            })?;
        }
    }
    for i in 0..20 {
        let mut rng = random::rng(seed.wrapping_add(100 + i));
        let (din, dout) = (1 + (i as usize % 4), 1 + (i as usize / 4 % 4));
        let a = random::random_channel(&mut rng, din, dout, 2);
        let rho = random::random_density(&mut rng, din);
        let rep = recovery_bounds(&a, &rho).map_err(err)?;
        s.check(rep.validate().is_ok(), || {
            format!("channel {i}: sandwich broken: {rep:?}")
        })?;
        for r in [
            barnum_knill_recovery(&a, &rho).map_err(err)?,
            transpose_channel(&a).map_err(err)?,
        ] {
            let fe = entanglement_fidelity(&r.compose(&a).map_err(err)?, &rho).map_err(err)?;
            s.check(rep.achieved >= fe * fe - SLACK, || {
                format!("channel {i}: tightness broken")
            })?;
        }
    }
    Ok(())
}

fn overlap(s: &mut Suite, seed: u64) -> Result<(), String> {
    for i in 0..20 {
        let mut rng = random::rng(seed.wrapping_add(200 + i));
        let (dk, dh, dl) = (1 + (i as usize % 3), 1 + (i as usize / 3 % 3), 2);
        let mu = random::random_psd(&mut rng, dk * dh, dk * dh);
        let phi = random::random_pure_state(&mut rng, dl * dh);
        let inst = OverlapInstance::new(dk, dh, dl, mu, phi).map_err(err)?;
        let rep = overlap_bounds(&inst).map_err(err)?;
        s.check(rep.validate().is_ok(), || {
            format!("instance {i}: sandwich broken: {rep:?}")
        })?;
    }
    for i in 0..10 {
        let mut rng = random::rng(seed.wrapping_add(300 + i));
        let m = 2 + (i as usize % 3);
        let e = random::random_ensemble(&mut rng, m, 2);
        let inst = ensemble_to_overlap(&e).map_err(err)?;
        let povm = random::random_povm(&mut rng, m, 2);
        let channel = CpMap::measurement_channel(&povm).map_err(err)?;
        let lhs = m as f64 * overlap_value(&inst, &channel).map_err(err)?;
        let rhs = p_succ(&e, &povm).map_err(err)?;
        s.check((lhs - rhs).abs() < 1e-10, || {
            format!("ensemble {i}: {lhs} vs {rhs}")
        })?;
        let lam = (m as f64).sqrt() * overlap_lambda(&inst).map_err(err)?;
        let hc = holevo_curlander_bounds(&e).map_err(err)?.lambda;
        s.check((lam - hc).abs() < 1e-10, || {
            format!("ensemble {i}: √m·Λ {lam} vs {hc}")
        })?;
    }
    let (me, dims) = specs::bipartite("max-entangled:d=2", seed).map_err(|e| e.to_string())?;
    for sv in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let r = min_entropy_bounds(&me, &dims, sv).map_err(err)?;
        s.check(
            (r.lower + 1.0).abs() < SLACK && (r.upper + 1.0).abs() < SLACK,
            || format!("maximally entangled, s={sv}: [{}, {}]", r.lower, r.upper),
        )?;
    }
    for i in 0..10 {
        let (rho, dims) = specs::bipartite("random-pure:da=2,db=3", seed.wrapping_add(400 + i))
            .map_err(|e| e.to_string())?;
        let rho_a = partial_trace(rho.matrix(), &dims, &[0]).map_err(err)?;
        let exact = -2.0
            * HermitianOperator::from_hermitian_part(&rho_a)
                .sqrt()
                .map_err(err)?
                .trace()
                .log2();
        let r = min_entropy_bounds(&rho, &dims, 0.5).map_err(err)?;
        s.check(
            (r.lower - exact).abs() < 1e-8 && (r.upper - exact).abs() < 1e-8,
            || format!("pure state {i}: [{}, {}] vs {exact}", r.lower, r.upper),
        )?;
    }
    Ok(())
}

fn iteration(s: &mut Suite, seed: u64) -> Result<(), String> {
    for i in 0..10 {
        let mut rng = random::rng(seed.wrapping_add(500 + i));
        let (m, d) = (2 + (i as usize % 4), 1 + (i as usize % 3));
        let e = random::random_ensemble(&mut rng, m, d);
        let start = random::random_povm(&mut rng, m, d);
        let (_, t) = iterate_povm_to_convergence(&e, &start, f64::MIN_POSITIVE, 50).map_err(err)?;
        s.check(t.check_monotone(1e-12).is_ok(), || {
            format!("JRF run {i} not monotone")
        })?;

        let dd = 1 + (i as usize % 3);
        let f = RwFunctional::new(dd, dd, random::random_psd(&mut rng, dd * dd, dd * dd))
            .map_err(err)?;
        let r0 = random::random_channel(&mut rng, dd, dd, 2);
        let (r, t) = rw_iterate_to_convergence(&f, &r0, f64::MIN_POSITIVE, 50).map_err(err)?;
        s.check(
            t.check_monotone(1e-12).is_ok() && r.is_quantum_operation(),
            || format!("Reimpell-Werner run {i} not monotone"),
        )?;

        let mu = random::random_psd(&mut rng, 4, 4);
        let phi = random::random_pure_state(&mut rng, 4);
        let inst = OverlapInstance::new(2, 2, 2, mu, phi).map_err(err)?;
        let u = random::random_channel(&mut rng, 2, 2, 2)
            .canonical_stinespring()
            .map_err(err)?;
        let scale = inst.mu().trace().max(1.0);
        let (_, t) =
            overlap_iterate_to_convergence(&inst, &u, f64::MIN_POSITIVE, 30).map_err(err)?;
        s.check(t.check_monotone(1e-12 * scale).is_ok(), || {
            format!("overlap run {i} not monotone")
        })?;
    }
    Ok(())
}

/// Returns the rendering and whether every suite passed. `inject_fault`
/// corrupts one report so the failure path can be exercised.
pub fn run(seed: u64, inject_fault: bool) -> Result<(Rendered, bool), CliError> {
    type Runner = Box<dyn Fn(&mut Suite) -> Result<(), String>>;
    let suites: Vec<(&'static str, Runner)> = vec![
        (
            "discrimination",
            Box::new(move |s| discrimination(s, seed, inject_fault)),
        ),
        ("recovery", Box::new(move |s| recovery(s, seed))),
        ("overlap", Box::new(move |s| overlap(s, seed))),
        ("iteration", Box::new(move |s| iteration(s, seed))),
    ];
    let mut results = Vec::new();
    for (name, runner) in suites {
        let mut suite = Suite { checks: 0 };
        let outcome = runner(&mut suite);
        results.push(SuiteResult {
            name,
            checks: suite.checks,
            passed: outcome.is_ok(),
            detail: outcome.err().unwrap_or_else(|| "ok".into()),
        });
    }
    let passed = results.iter().all(|r| r.passed);
    let mut table = Table::new(vec!["suite", "checks", "status", "detail"]);
    for r in &results {
        table.row(vec![
            r.name.into(),
            r.checks.into(),
            Cell::from(if r.passed { "PASS" } else { "FAIL" }),
            Cell::Text(r.detail.replace(',', ";")),
        ]);
    }
    let out = SelftestOutput {
        suites: results,
        passed,
    };
    Ok((Rendered::new(&out, table)?, passed))
}
