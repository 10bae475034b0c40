//! JSON wire formats. Matrices are {"rows","cols","data":[[re,im],…]} in
//! row-major order; tensor-factored objects add "dims".

use std::path::Path;

use qbounds::channel::CpMap;
use qbounds::measure::Ensemble;
use qbounds::numlin::{ComplexMatrix, HermitianOperator, TensorFactorization, C64};
use qbounds::overlap::OverlapInstance;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    pub data: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
pub struct EnsembleJson {
    pub dim: usize,
    pub states: Vec<MatrixJson>,
}

#[derive(Debug, Deserialize)]
pub struct CpMapJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<MatrixJson>,
}

#[derive(Debug, Deserialize)]
pub struct OverlapJson {
    pub dim_k: usize,
    pub dim_h: usize,
    pub dim_l: usize,
    pub mu: MatrixJson,
    pub phi: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
pub struct BipartiteJson {
    pub dims: Vec<usize>,
    pub rho: MatrixJson,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            dims: None,
            data: m.to_row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix, CliError> {
        let data = self.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        Ok(ComplexMatrix::from_row_major(self.rows, self.cols, data)?)
    }

    pub fn to_hermitian(&self) -> Result<HermitianOperator, CliError> {
        Ok(HermitianOperator::new(self.to_matrix()?)?)
    }
}

fn vector(entries: &[[f64; 2]]) -> Vec<C64> {
    entries.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

fn mismatch(msg: String) -> CliError {
    CliError::Usage(msg)
}

impl EnsembleJson {
    pub fn into_ensemble(self) -> Result<Ensemble, CliError> {
        let states = self
            .states
            .iter()
            .map(MatrixJson::to_hermitian)
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(s) = states.iter().find(|s| s.dim() != self.dim) {
            return Err(mismatch(format!(
                "state of size {} in ensemble of dim {}",
                s.dim(),
                self.dim
            )));
        }
        Ok(Ensemble::new(states)?)
    }
}

impl CpMapJson {
    pub fn into_map(self) -> Result<CpMap, CliError> {
        let kraus = self
            .kraus
            .iter()
            .map(MatrixJson::to_matrix)
            .collect::<Result<Vec<_>, _>>()?;
        let map = CpMap::new(self.dim_in, self.dim_out, kraus)?;
        map.check_quantum_operation()?;
        Ok(map)
    }
}

impl OverlapJson {
    pub fn into_instance(self) -> Result<OverlapInstance, CliError> {
        if let Some(d) = &self.mu.dims {
            if d.as_slice() != [self.dim_k, self.dim_h] {
                return Err(mismatch(format!(
                    "mu dims {d:?} do not match [dim_k, dim_h] = [{}, {}]",
                    self.dim_k, self.dim_h
                )));
            }
        }
        let mu = self.mu.to_hermitian()?;
        Ok(OverlapInstance::new(
            self.dim_k,
            self.dim_h,
            self.dim_l,
            mu,
            vector(&self.phi),
        )?)
    }
}

impl BipartiteJson {
    pub fn into_state(self) -> Result<(HermitianOperator, TensorFactorization), CliError> {
        if self.dims.len() != 2 {
            return Err(mismatch(format!(
                "expected two factor dimensions, got {:?}",
                self.dims
            )));
        }
        Ok((
            self.rho.to_hermitian()?,
            TensorFactorization::new(self.dims)?,
        ))
    }
}

/// A parsed input file, classified by its keys.
pub enum InputFile {
    Ensemble(Ensemble),
    Map(CpMap),
    Overlap(OverlapInstance),
    Bipartite(HermitianOperator, TensorFactorization),
    Matrix(HermitianOperator),
}

pub fn read_input(path: &Path) -> Result<InputFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_input(&text).map_err(|e| match e {
        CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_input(text: &str) -> Result<InputFile, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid JSON: {e}")))?;
    let has = |k: &str| value.get(k).is_some();
    let decode_err = |e: serde_json::Error| CliError::Usage(format!("malformed input: {e}"));
    if has("states") {
        let e: EnsembleJson = serde_json::from_value(value).map_err(decode_err)?;
        Ok(InputFile::Ensemble(e.into_ensemble()?))
    } else if has("kraus") {
        let m: CpMapJson = serde_json::from_value(value).map_err(decode_err)?;
        Ok(InputFile::Map(m.into_map()?))
    } else if has("mu") {
        let o: OverlapJson = serde_json::from_value(value).map_err(decode_err)?;
        Ok(InputFile::Overlap(o.into_instance()?))
    } else if has("rho") {
        let b: BipartiteJson = serde_json::from_value(value).map_err(decode_err)?;
        let (rho, dims) = b.into_state()?;
        Ok(InputFile::Bipartite(rho, dims))
    } else if has("data") {
        let m: MatrixJson = serde_json::from_value(value).map_err(decode_err)?;
        Ok(InputFile::Matrix(m.to_hermitian()?))
    } else {
        Err(CliError::Usage(
            "unrecognized input: expected an ensemble, map, overlap instance, bipartite state or matrix".into(),
        ))
    }
}
