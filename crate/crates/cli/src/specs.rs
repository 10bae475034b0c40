//! Named instances ("depolarizing:p=0.5,d=2") and the file-or-spec resolver.

use std::collections::BTreeMap;
use std::path::Path;

use qbounds::channel::CpMap;
use qbounds::measure::Ensemble;
use qbounds::numlin::{
    double_ket, ComplexMatrix, HermitianOperator, TensorFactorization, C64, ONE, ZERO,
};
use qbounds::overlap::OverlapInstance;
use qbounds::random;

use crate::error::CliError;
use crate::io::{read_input, InputFile};

struct Spec {
    name: String,
    params: BTreeMap<String, String>,
    positional: Vec<String>,
}

impl Spec {
    fn parse(text: &str) -> Result<Self, CliError> {
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n, r),
            None => (text, ""),
        };
        let mut params = BTreeMap::new();
        let mut positional = Vec::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((k, v)) => {
                    if params
                        .insert(k.trim().to_string(), v.trim().to_string())
                        .is_some()
                    {
                        return Err(CliError::Usage(format!(
                            "parameter {k} given twice in {text:?}"
                        )));
                    }
                }
                None => positional.push(part.trim().to_string()),
            }
        }
        Ok(Self {
            name: name.trim().to_string(),
            params,
            positional,
        })
    }

    fn allow(&self, keys: &[&str]) -> Result<(), CliError> {
        if let Some(k) = self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            return Err(CliError::Usage(format!(
                "unknown parameter {k} for {}; expected one of {keys:?}",
                self.name
            )));
        }
        if !self.positional.is_empty() && self.name != "unitary" {
            return Err(CliError::Usage(format!(
                "unexpected argument {:?} for {}",
                self.positional[0], self.name
            )));
        }
        Ok(())
    }

    fn real(&self, key: &str, default: Option<f64>) -> Result<f64, CliError> {
        match self.params.get(key) {
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{key}={v} is not a finite number"))),
            None => default.ok_or_else(|| CliError::Usage(format!("{} needs {key}=…", self.name))),
        }
    }

    fn count(&self, key: &str, default: Option<usize>) -> Result<usize, CliError> {
        match self.params.get(key) {
            Some(v) => v
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage(format!("{key}={v} is not a positive integer"))),
            None => default.ok_or_else(|| CliError::Usage(format!("{} needs {key}=…", self.name))),
        }
    }
}

fn unknown(kind: &str, text: &str, known: &str) -> CliError {
    CliError::Usage(format!(
        "{text:?} is neither a readable file nor a known {kind} (known: {known})"
    ))
}

fn basis(d: usize, i: usize) -> Vec<C64> {
    (0..d).map(|j| if i == j { ONE } else { ZERO }).collect()
}

fn is_file(text: &str) -> bool {
    Path::new(text).is_file()
}

pub fn ensemble(text: &str, seed: u64) -> Result<Ensemble, CliError> {
    if is_file(text) {
        return match read_input(Path::new(text))? {
            InputFile::Ensemble(e) => Ok(e),
            _ => Err(CliError::Usage(format!(
                "{text} does not contain an ensemble"
            ))),
        };
    }
    let spec = Spec::parse(text)?;
    let h = 1.0 / 2f64.sqrt();
    match spec.name.as_str() {
        "orthogonal" => {
            spec.allow(&["d"])?;
            let d = spec.count("d", Some(2))?;
            let w = vec![1.0 / d as f64; d];
            let vs: Vec<_> = (0..d).map(|i| basis(d, i)).collect();
            Ok(Ensemble::from_pure(&w, &vs)?)
        }
        "zero-plus" => {
            spec.allow(&[])?;
            Ok(Ensemble::from_pure(
                &[0.5, 0.5],
                &[basis(2, 0), vec![C64::new(h, 0.0); 2]],
            )?)
        }
        "identical" => {
            spec.allow(&["m", "d"])?;
            let (m, d) = (spec.count("m", Some(2))?, spec.count("d", Some(2))?);
            let rho = HermitianOperator::identity(d).scale(1.0 / (m * d) as f64);
            Ok(Ensemble::new(vec![rho; m])?)
        }
        "random" => {
            spec.allow(&["m", "d"])?;
            let (m, d) = (spec.count("m", Some(3))?, spec.count("d", Some(2))?);
            Ok(random::random_ensemble(&mut random::rng(seed), m, d))
        }
        _ => Err(unknown(
            "ensemble",
            text,
            "orthogonal[:d=], zero-plus, identical:m=,d=, random:m=,d=",
        )),
    }
}

pub fn channel(text: &str, seed: u64) -> Result<CpMap, CliError> {
    if is_file(text) {
        return match read_input(Path::new(text))? {
            InputFile::Map(m) => Ok(m),
            _ => Err(CliError::Usage(format!(
                "{text} does not contain a Kraus list"
            ))),
        };
    }
    let spec = Spec::parse(text)?;
    match spec.name.as_str() {
        "depolarizing" => {
            spec.allow(&["p", "d"])?;
            Ok(CpMap::depolarizing(spec.real("p", None)?, spec.count("d", Some(2))?)?)
        }
        "amplitude-damping" => {
            spec.allow(&["gamma"])?;
            Ok(CpMap::amplitude_damping(spec.real("gamma", None)?)?)
        }
        "identity" => {
            spec.allow(&["d"])?;
            Ok(CpMap::identity(spec.count("d", Some(2))?))
        }
        "unitary" => {
            spec.allow(&[])?;
            let which = spec.positional.first().map(String::as_str).unwrap_or("");
            Ok(CpMap::unitary(named_unitary(which)?)?)
        }
        "random" => {
            spec.allow(&["din", "dout", "kraus"])?;
            let din = spec.count("din", Some(2))?;
            let dout = spec.count("dout", Some(din))?;
            let kraus = spec.count("kraus", Some(2))?;
            Ok(random::random_channel(&mut random::rng(seed), din, dout, kraus))
        }
        _ => Err(unknown(
            "channel",
            text,
            "depolarizing:p=,d=, amplitude-damping:gamma=, identity:d=, unitary:hadamard|H|X|Y|Z, random:din=,dout=,kraus=",
        )),
    }
}

fn named_unitary(which: &str) -> Result<ComplexMatrix, CliError> {
    let r = |x: f64| C64::new(x, 0.0);
    let h = 1.0 / 2f64.sqrt();
    let data = match which {
        "hadamard" | "H" => vec![r(h), r(h), r(h), r(-h)],
        "X" => vec![ZERO, ONE, ONE, ZERO],
        "Y" => vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO],
        "Z" => vec![ONE, ZERO, ZERO, r(-1.0)],
        _ => {
            return Err(CliError::Usage(format!(
                "unknown unitary {which:?} (known: hadamard, H, X, Y, Z)"
            )))
        }
    };
    Ok(ComplexMatrix::from_row_major(2, 2, data)?)
}

/// Input state for reversal: "maximally-mixed", "random", or a matrix file.
pub fn state(text: &str, dim: usize, seed: u64) -> Result<HermitianOperator, CliError> {
    if is_file(text) {
        return match read_input(Path::new(text))? {
            InputFile::Matrix(m) => Ok(m),
            _ => Err(CliError::Usage(format!("{text} does not contain a matrix"))),
        };
    }
    match text {
        "maximally-mixed" => Ok(HermitianOperator::identity(dim).scale(1.0 / dim as f64)),
        // offset keeps the state independent of a random channel drawn from the same seed
        "random" => Ok(random::random_density(
            &mut random::rng(seed.wrapping_add(1)),
            dim,
        )),
        _ => Err(unknown("state", text, "maximally-mixed, random")),
    }
}

pub fn bipartite(
    text: &str,
    seed: u64,
) -> Result<(HermitianOperator, TensorFactorization), CliError> {
    if is_file(text) {
        return match read_input(Path::new(text))? {
            InputFile::Bipartite(rho, dims) => Ok((rho, dims)),
            _ => Err(CliError::Usage(format!(
                "{text} does not contain a bipartite state"
            ))),
        };
    }
    let spec = Spec::parse(text)?;
    match spec.name.as_str() {
        "max-entangled" => {
            spec.allow(&["d"])?;
            let d = spec.count("d", Some(2))?;
            let c = 1.0 / (d as f64).sqrt();
            let phi: Vec<C64> = double_ket(&ComplexMatrix::identity(d))
                .column_entries(0)
                .into_iter()
                .map(|z| z * c)
                .collect();
            Ok((
                HermitianOperator::ket_bra(&phi),
                TensorFactorization::new(vec![d, d])?,
            ))
        }
        "product" => {
            spec.allow(&["d", "db"])?;
            let (d, db) = (spec.count("d", Some(2))?, spec.count("db", Some(2))?);
            let sigma = random::random_density(&mut random::rng(seed), db);
            let mixed = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
            let rho = HermitianOperator::from_hermitian_part(&mixed.kron(sigma.matrix()));
            Ok((rho, TensorFactorization::new(vec![d, db])?))
        }
        "random-pure" => {
            spec.allow(&["da", "db"])?;
            let (da, db) = (spec.count("da", Some(2))?, spec.count("db", Some(2))?);
            let psi = random::random_pure_state(&mut random::rng(seed), da * db);
            Ok((
                HermitianOperator::ket_bra(&psi),
                TensorFactorization::new(vec![da, db])?,
            ))
        }
        "random" => {
            spec.allow(&["da", "db"])?;
            let (da, db) = (spec.count("da", Some(2))?, spec.count("db", Some(2))?);
            let rho = random::random_density(&mut random::rng(seed), da * db);
            Ok((rho, TensorFactorization::new(vec![da, db])?))
        }
        _ => Err(unknown(
            "bipartite state",
            text,
            "max-entangled:d=, product:d=,db=, random-pure:da=,db=, random:da=,db=",
        )),
    }
}

/// Either problem the iterate command understands.
pub enum IterateProblem {
    Measure(Ensemble),
    Overlap(OverlapInstance),
}

pub fn iterate_problem(text: &str, seed: u64) -> Result<IterateProblem, CliError> {
    if is_file(text) {
        return match read_input(Path::new(text))? {
            InputFile::Ensemble(e) => Ok(IterateProblem::Measure(e)),
            InputFile::Overlap(o) => Ok(IterateProblem::Overlap(o)),
            _ => Err(CliError::Usage(format!(
                "{text} contains neither an ensemble nor an overlap instance"
            ))),
        };
    }
    let spec = Spec::parse(text)?;
    match spec.name.as_str() {
        "overlap" => {
            spec.allow(&["dk", "dh", "dl"])?;
            let dk = spec.count("dk", Some(2))?;
            let dh = spec.count("dh", Some(2))?;
            let dl = spec.count("dl", Some(dk))?;
            let mut rng = random::rng(seed);
            let mu = random::random_psd(&mut rng, dk * dh, dk * dh);
            let phi = random::random_pure_state(&mut rng, dl * dh);
            Ok(IterateProblem::Overlap(OverlapInstance::new(
                dk, dh, dl, mu, phi,
            )?))
        }
        "perfect-overlap" => {
            spec.allow(&["d", "dh"])?;
            let (d, dh) = (spec.count("d", Some(2))?, spec.count("dh", Some(2))?);
            let phi = random::random_pure_state(&mut random::rng(seed), d * dh);
            let mu = HermitianOperator::ket_bra(&phi);
            Ok(IterateProblem::Overlap(OverlapInstance::new(
                d, dh, d, mu, phi,
            )?))
        }
        _ => ensemble(text, seed)
            .map(IterateProblem::Measure)
            .map_err(|e| match e {
                CliError::Usage(_) => unknown(
                    "problem",
                    text,
                    "any ensemble spec, overlap:dk=,dh=,dl=, perfect-overlap:d=,dh=",
                ),
                other => other,
            }),
    }
}
