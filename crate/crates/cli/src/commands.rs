use qbounds::channel::{
    barnum_knill_recovery, entanglement_fidelity, quadratic_recovery, recovery_bounds,
    transpose_channel, CpMap,
};
use qbounds::iterate::{
    iterate_povm_from_identity, iterate_povm_to_convergence, overlap_iterate_from_guess,
    overlap_iterate_to_convergence, IterationTrace,
};
use qbounds::measure::{
    helstrom_optimal, holevo_curlander_bounds, p_succ, pretty_good_measurement,
    quadratic_measurement, Ensemble, Povm,
};
use qbounds::numlin::HermitianOperator;
use qbounds::overlap::{min_entropy_sweep, overlap_bounds, OverlapInstance};
use qbounds::{random, BoundReport};
use serde::Serialize;

use crate::error::CliError;
use crate::io::MatrixJson;
use crate::report::{Cell, Rendered, Table};
use crate::specs::{self, IterateProblem};

/// Per-step slack for the monotonicity self-audit.
pub const MONOTONE_SLACK: f64 = 1e-12;
pub const DEFAULT_S_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub struct RunConfig {
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
    pub s: Vec<f64>,
    pub dump_choi: bool,
}

fn validated(report: &BoundReport) -> Result<(), CliError> {
    report
        .validate()
        .map_err(|e| CliError::Violation(e.to_string()))
}

#[derive(Serialize)]
struct DiscriminationOutput {
    states: usize,
    dim: usize,
    lambda: f64,
    lambda_sq: f64,
    p_succ_qw: f64,
    p_succ_pgm: f64,
    helstrom: Option<f64>,
    upper: f64,
}

pub fn discriminate(target: &str, cfg: &RunConfig) -> Result<Rendered, CliError> {
    let e = specs::ensemble(target, cfg.seed)?;
    let report = holevo_curlander_bounds(&e)?;
    validated(&report)?;
    let pgm = p_succ(&e, &pretty_good_measurement(&e)?)?;
    let top = report.oracle_optimal.unwrap_or(report.upper);
    if pgm > top + 1e-9 {
        return Err(CliError::Violation(format!(
            "pretty-good measurement success {pgm} exceeds {top}"
        )));
    }
    let out = DiscriminationOutput {
        states: e.len(),
        dim: e.dim(),
        lambda: report.lambda,
        lambda_sq: report.lambda_sq,
        p_succ_qw: report.achieved,
        p_succ_pgm: pgm,
        helstrom: report.oracle_optimal,
        upper: report.upper,
    };
    let table = Table::metrics(vec![
        ("lambda", out.lambda.into()),
        ("lambda_sq", out.lambda_sq.into()),
        ("p_succ_qw", out.p_succ_qw.into()),
        ("p_succ_pgm", out.p_succ_pgm.into()),
        ("helstrom", out.helstrom.into()),
        ("upper", out.upper.into()),
    ]);
    Rendered::new(&out, table)
}

#[derive(Serialize)]
struct TraceOutput {
    seminorms: Vec<f64>,
    lambda: Vec<f64>,
    stop_reason: &'static str,
    steps: usize,
    converged: bool,
    problem: &'static str,
    start: String,
    final_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    helstrom: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundsOutput>,
    label: &'static str,
}

#[derive(Serialize)]
struct BoundsOutput {
    lambda: f64,
    lower: f64,
    achieved: f64,
    upper: f64,
}

impl From<&BoundReport> for BoundsOutput {
    fn from(r: &BoundReport) -> Self {
        Self {
            lambda: r.lambda,
            lower: r.lower,
            achieved: r.achieved,
            upper: r.upper,
        }
    }
}

/// Step 0 is a feasible start; λ on row n belongs to the element whose
/// successor is row n.
fn trace_table(trace: &IterationTrace) -> Table {
    let offset = trace.seminorms.len() - trace.lambda_values.len();
    let mut t = Table::new(vec!["step", "seminorm", "lambda"]);
    for (i, s) in trace.seminorms.iter().enumerate() {
        let lam = i
            .checked_sub(offset)
            .and_then(|j| trace.lambda_values.get(j).copied());
        t.row(vec![(i + 1 - offset).into(), (*s).into(), lam.into()]);
    }
    t.row(vec![
        "stop_reason".into(),
        trace.stop_reason.as_str().into(),
        Cell::Empty,
    ]);
    t
}

fn start_povm(e: &Ensemble, start: &str, seed: u64) -> Result<Option<Povm>, CliError> {
    match start {
        "identity" | "auto" => Ok(None),
        "qw" => Ok(Some(quadratic_measurement(e)?)),
        "pgm" => Ok(Some(pretty_good_measurement(e)?)),
        "helstrom" | "perfect" => Ok(Some(helstrom_optimal(e)?.1)),
        "random" => Ok(Some(random::random_povm(
            &mut random::rng(seed.wrapping_add(1)),
            e.len(),
            e.dim(),
        ))),
        _ => Err(CliError::Usage(format!(
            "unknown start {start:?} for a measurement problem (identity, qw, pgm, helstrom, random)"
        ))),
    }
}

pub fn iterate(target: &str, start: &str, cfg: &RunConfig) -> Result<Rendered, CliError> {
    let (trace, out) = match specs::iterate_problem(target, cfg.seed)? {
        IterateProblem::Measure(e) => iterate_measure(&e, start, cfg)?,
        IterateProblem::Overlap(inst) => iterate_overlap(&inst, start, cfg)?,
    };
    let scale = out.bounds.as_ref().map_or(1.0, |b| b.upper.max(1.0));
    trace
        .check_monotone(MONOTONE_SLACK * scale)
        .map_err(|e| CliError::Violation(e.to_string()))?;
    let table = trace_table(&trace);
    Rendered::new(&out, table)
}

fn trace_output(
    trace: &IterationTrace,
    problem: &'static str,
    start: &str,
    final_value: f64,
) -> TraceOutput {
    TraceOutput {
        seminorms: trace.seminorms.clone(),
        lambda: trace.lambda_values.clone(),
        stop_reason: trace.stop_reason.as_str(),
        steps: trace.steps,
        converged: trace.converged,
        problem,
        start: start.to_string(),
        final_value,
        helstrom: None,
        bounds: None,
        label: "monotone lower estimate",
    }
}

fn iterate_measure(
    e: &Ensemble,
    start: &str,
    cfg: &RunConfig,
) -> Result<(IterationTrace, TraceOutput), CliError> {
    let povm = start_povm(e, start, cfg.seed)?;
    let (end, trace) = match &povm {
        None => iterate_povm_from_identity(e, cfg.tol, cfg.max_iters)?,
        Some(p) => iterate_povm_to_convergence(e, p, cfg.tol, cfg.max_iters)?,
    };
    let name = if start == "auto" { "identity" } else { start };
    let mut out = trace_output(&trace, "measure", name, p_succ(e, &end)?);
    if e.len() == 2 {
        let opt = helstrom_optimal(e)?.0;
        if out.final_value > opt + 1e-9 {
            return Err(CliError::Violation(format!(
                "iterated success {} exceeds the optimum {opt}",
                out.final_value
            )));
        }
        out.helstrom = Some(opt);
    }
    Ok((trace, out))
}

fn iterate_overlap(
    inst: &OverlapInstance,
    start: &str,
    cfg: &RunConfig,
) -> Result<(IterationTrace, TraceOutput), CliError> {
    let bounds = overlap_bounds(inst)?;
    validated(&bounds)?;
    let (end, trace, name) = match start {
        "guess" | "auto" => {
            let (u, t) = overlap_iterate_from_guess(inst, cfg.tol, cfg.max_iters)?;
            (u, t, "guess")
        }
        "identity" => {
            if inst.dim_k() != inst.dim_l() {
                return Err(CliError::Usage("identity start needs dim_k = dim_l".into()));
            }
            let u = CpMap::identity(inst.dim_k()).canonical_stinespring()?;
            let (u, t) = overlap_iterate_to_convergence(inst, &u, cfg.tol, cfg.max_iters)?;
            (u, t, "identity")
        }
        "random" => {
            let mut rng = random::rng(cfg.seed.wrapping_add(1));
            let r = random::random_channel(&mut rng, inst.dim_k(), inst.dim_l(), 2);
            let u = r.canonical_stinespring()?;
            let (u, t) = overlap_iterate_to_convergence(inst, &u, cfg.tol, cfg.max_iters)?;
            (u, t, "random")
        }
        _ => {
            return Err(CliError::Usage(format!(
                "unknown start {start:?} for an overlap problem (guess, identity, random)"
            )))
        }
    };
    let value = qbounds::overlap::overlap_value(inst, &end.to_map()?)?;
    if value > bounds.upper * (1.0 + 1e-9) + 1e-9 {
        return Err(CliError::Violation(format!(
            "iterated overlap {value} exceeds the upper bound {}",
            bounds.upper
        )));
    }
    let mut out = trace_output(&trace, "overlap", name, value);
    out.bounds = Some(BoundsOutput::from(&bounds));
    Ok((trace, out))
}

#[derive(Serialize)]
struct ReversalOutput {
    dim_in: usize,
    dim_out: usize,
    lambda: f64,
    lambda_sq: f64,
    lower: f64,
    upper: f64,
    output_trace: f64,
    fidelity_quadratic: f64,
    /// Recovery map on its own; only defined when input and output spaces agree.
    fidelity_quadratic_alone: Option<f64>,
    fidelity_barnum_knill: f64,
    fidelity_transpose: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    choi: Option<ChoiDump>,
}

#[derive(Serialize)]
struct ChoiDump {
    quadratic: MatrixJson,
    barnum_knill: MatrixJson,
    transpose: MatrixJson,
}

fn dump(map: &CpMap) -> MatrixJson {
    let mut m = MatrixJson::from_matrix(map.choi().matrix().matrix());
    m.dims = Some(vec![map.dim_out(), map.dim_in()]);
    m
}

pub fn reverse(channel: &str, rho: &str, cfg: &RunConfig) -> Result<Rendered, CliError> {
    let a = specs::channel(channel, cfg.seed)?;
    let rho: HermitianOperator = specs::state(rho, a.dim_in(), cfg.seed)?;
    let report = recovery_bounds(&a, &rho)?;
    validated(&report)?;
    let qr = quadratic_recovery(&a, &rho)?;
    let bk = barnum_knill_recovery(&a, &rho)?;
    let tc = transpose_channel(&a)?;
    let fe =
        |r: &CpMap| -> Result<f64, CliError> { Ok(entanglement_fidelity(&r.compose(&a)?, &rho)?) };
    let (f_bk, f_tc) = (fe(&bk)?, fe(&tc)?);
    for (name, f) in [("Barnum-Knill", f_bk), ("transpose", f_tc)] {
        if report.achieved < f * f - 1e-9 {
            return Err(CliError::Violation(format!(
                "quadratic recovery fidelity {} below squared {name} fidelity {}",
                report.achieved,
                f * f
            )));
        }
    }
    let out = ReversalOutput {
        dim_in: a.dim_in(),
        dim_out: a.dim_out(),
        lambda: report.lambda,
        lambda_sq: report.lambda_sq,
        lower: report.lower,
        upper: report.upper,
        output_trace: report.lambda_cap,
        fidelity_quadratic: report.achieved,
        fidelity_quadratic_alone: if a.dim_in() == a.dim_out() {
            Some(entanglement_fidelity(&qr, &rho)?)
        } else {
            None
        },
        fidelity_barnum_knill: f_bk,
        fidelity_transpose: f_tc,
        choi: cfg.dump_choi.then(|| ChoiDump {
            quadratic: dump(&qr),
            barnum_knill: dump(&bk),
            transpose: dump(&tc),
        }),
    };
    let table = Table::metrics(vec![
        ("lambda", out.lambda.into()),
        ("lambda_sq", out.lambda_sq.into()),
        ("lower", out.lower.into()),
        ("upper", out.upper.into()),
        ("output_trace", out.output_trace.into()),
        ("fidelity_quadratic", out.fidelity_quadratic.into()),
        (
            "fidelity_quadratic_alone",
            out.fidelity_quadratic_alone.into(),
        ),
        ("fidelity_barnum_knill", out.fidelity_barnum_knill.into()),
        ("fidelity_transpose", out.fidelity_transpose.into()),
    ]);
    Rendered::new(&out, table)
}

#[derive(Serialize)]
struct EntropyRow {
    s: f64,
    lower: f64,
    upper: f64,
}

#[derive(Serialize)]
struct EntropyOutput {
    dims: Vec<usize>,
    rows: Vec<EntropyRow>,
    best_lower: f64,
    best_upper: f64,
    unit: &'static str,
}

pub fn minentropy(state: &str, cfg: &RunConfig) -> Result<Rendered, CliError> {
    let (rho, dims) = specs::bipartite(state, cfg.seed)?;
    let grid: Vec<f64> = if cfg.s.is_empty() {
        DEFAULT_S_GRID.to_vec()
    } else {
        cfg.s.clone()
    };
    if let Some(bad) = grid.iter().find(|s| !s.is_finite()) {
        return Err(CliError::Usage(format!("--s {bad} is not finite")));
    }
    let (reports, best_lower, best_upper) = min_entropy_sweep(&rho, &dims, &grid)?;
    for r in &reports {
        r.validate()
            .map_err(|e| CliError::Violation(e.to_string()))?;
    }
    if best_lower > best_upper + 1e-9 {
        return Err(CliError::Violation(format!(
            "best lower bound {best_lower} exceeds best upper bound {best_upper}"
        )));
    }
    let mut table = Table::new(vec!["s", "lower", "upper"]);
    for r in &reports {
        table.row(vec![r.s.into(), r.lower.into(), r.upper.into()]);
    }
    table.row(vec!["best".into(), best_lower.into(), best_upper.into()]);
    let out = EntropyOutput {
        dims: dims.dims().to_vec(),
        rows: reports
            .iter()
            .map(|r| EntropyRow {
                s: r.s,
                lower: r.lower,
                upper: r.upper,
            })
            .collect(),
        best_lower,
        best_upper,
        unit: "bits",
    };
    Rendered::new(&out, table)
}
