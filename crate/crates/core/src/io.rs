//! On-disk formats.
//!
//! - `s4-params-v1`: one DPLR system as JSON. Complex numbers are `[re, im]`;
//!   `p` and `q` are lists of `rank` columns of length `N`.
//! - `s4-layer-v1`: a layer manifest holding one `s4-params-v1` block and a
//!   skip weight `d` per feature, plus the mixing matrix (row-major), bias
//!   and activation.
//! - Kernels: a 16-byte header (`"S4K1"`, `u32` length, `u32` reserved, then
//!   4 zero padding bytes, all little-endian) followed by `f64` values, or CSV
//!   with `index,value`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::hippo::HippoFamily;
use crate::layer::{Activation, FeatureParams, S4LayerParams};
use crate::ssm::DplrSpec;
use crate::{CMat, CVec, Error, Result, C64};

pub const PARAMS_FORMAT: &str = "s4-params-v1";
pub const LAYER_FORMAT: &str = "s4-layer-v1";
pub const KERNEL_MAGIC: &[u8; 4] = b"S4K1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ParamsFile {
    format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<HippoFamily>,
    rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    lambda: Vec<C64>,
    p: Vec<Vec<C64>>,
    q: Vec<Vec<C64>>,
    b: Vec<C64>,
    c: Vec<C64>,
    #[serde(default)]
    conjugate_symmetric: bool,
}

/// A DPLR system with the optional metadata stored alongside it.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamsBlock {
    pub spec: DplrSpec,
    pub delta: Option<f64>,
    pub family: Option<HippoFamily>,
}

fn columns(m: &CMat) -> Vec<Vec<C64>> {
    m.column_iter().map(|c| c.iter().cloned().collect()).collect()
}

fn from_columns(field: &'static str, cols: &[Vec<C64>], n: usize) -> Result<CMat> {
    for c in cols {
        if c.len() != n {
            return Err(Error::DimensionMismatch { field, expected: n, found: c.len() });
        }
    }
    Ok(CMat::from_fn(n, cols.len(), |i, j| cols[j][i]))
}

impl ParamsBlock {
    fn to_file(&self) -> ParamsFile {
        ParamsFile {
            format: PARAMS_FORMAT.into(),
            family: self.family,
            rank: self.spec.rank(),
            delta: self.delta,
            lambda: self.spec.lambda().iter().cloned().collect(),
            p: columns(self.spec.p()),
            q: columns(self.spec.q()),
            b: self.spec.b().iter().cloned().collect(),
            c: self.spec.c().iter().cloned().collect(),
            conjugate_symmetric: self.spec.conjugate_symmetric(),
        }
    }

    fn from_file(f: ParamsFile) -> Result<Self> {
        if f.format != PARAMS_FORMAT {
            return Err(Error::Format(format!("expected format `{PARAMS_FORMAT}`, found `{}`", f.format)));
        }
        if f.p.len() != f.rank || f.q.len() != f.rank {
            return Err(Error::Format(format!(
                "rank {} but {} columns in p and {} in q",
                f.rank,
                f.p.len(),
                f.q.len()
            )));
        }
        if let Some(d) = f.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidParameter(format!("delta must be positive, got {d}")));
            }
        }
        let n = f.lambda.len();
        let spec = DplrSpec::new(
            CVec::from_vec(f.lambda),
            from_columns("p", &f.p, n)?,
            from_columns("q", &f.q, n)?,
            CVec::from_vec(f.b),
            CVec::from_vec(f.c),
            f.conjugate_symmetric,
        )?;
        Ok(Self { spec, delta: f.delta, family: f.family })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureEntry {
    params: ParamsFile,
    d: f64,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    format: String,
    h: usize,
    n: usize,
    activation: Activation,
    features: Vec<FeatureEntry>,
    /// Row-major `H x H`.
    mix: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

pub fn layer_to_json(params: &S4LayerParams) -> Result<String> {
    params.validate()?;
    let features = (0..params.h())
        .map(|i| {
            let block = ParamsBlock {
                spec: params.spec(i)?,
                delta: Some(params.features[i].delta),
                family: params.family,
            };
            Ok(FeatureEntry { params: block.to_file(), d: params.features[i].d })
        })
        .collect::<Result<Vec<_>>>()?;
    let file = LayerFile {
        format: LAYER_FORMAT.into(),
        h: params.h(),
        n: params.n(),
        activation: params.activation,
        features,
        mix: params.mix.row_iter().map(|r| r.iter().cloned().collect()).collect(),
        bias: params.bias.iter().cloned().collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Inverse of [`layer_to_json`]. Every feature must carry the same `P`, `Q`;
/// a feature whose `Lambda` differs from the first keeps its own copy.
pub fn layer_from_json(s: &str) -> Result<S4LayerParams> {
    let file: LayerFile = serde_json::from_str(s)?;
    if file.format != LAYER_FORMAT {
        return Err(Error::Format(format!("expected format `{LAYER_FORMAT}`, found `{}`", file.format)));
    }
    if file.features.len() != file.h || file.h == 0 {
        return Err(Error::DimensionMismatch { field: "features", expected: file.h, found: file.features.len() });
    }
    let mut blocks = Vec::with_capacity(file.h);
    let mut ds = Vec::with_capacity(file.h);
    for (i, f) in file.features.into_iter().enumerate() {
        let block = ParamsBlock::from_file(f.params).map_err(|e| e.in_feature(i))?;
        if block.spec.n() != file.n {
            return Err(Error::DimensionMismatch { field: "state size", expected: file.n, found: block.spec.n() }.in_feature(i));
        }
        if block.delta.is_none() {
            return Err(Error::Format("missing delta".into()).in_feature(i));
        }
        blocks.push(block);
        ds.push(f.d);
    }
    let first = blocks[0].spec.clone();
    let mut features = Vec::with_capacity(file.h);
    for (i, (block, d)) in blocks.iter().zip(ds).enumerate() {
        if block.spec.p() != first.p() || block.spec.q() != first.q() {
            return Err(Error::Format("low-rank factors differ from feature 0".into()).in_feature(i));
        }
        features.push(FeatureParams {
            lambda: (block.spec.lambda() != first.lambda()).then(|| block.spec.lambda().clone()),
            b: block.spec.b().clone(),
            c: block.spec.c().clone(),
            delta: block.delta.expect("checked above"),
            d,
        });
    }
    let h = file.h;
    if file.mix.len() != h || file.mix.iter().any(|r| r.len() != h) {
        return Err(Error::DimensionMismatch { field: "mix", expected: h, found: file.mix.len() });
    }
    let params = S4LayerParams {
        family: blocks[0].family,
        lambda: first.lambda().clone(),
        p: first.p().clone(),
        q: first.q().clone(),
        features,
        mix: DMatrix::from_fn(h, h, |i, j| file.mix[i][j]),
        bias: DVector::from_vec(file.bias),
        activation: file.activation,
    };
    params.validate()?;
    Ok(params)
}

pub fn write_kernel_binary(k: &[f64], mut w: impl Write) -> Result<()> {
    let len = u32::try_from(k.len()).map_err(|_| Error::InvalidSize { what: "kernel length", value: k.len() })?;
    w.write_all(KERNEL_MAGIC)?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&[0u8; 4])?;
    for v in k {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_kernel_binary(mut r: impl Read) -> Result<Vec<f64>> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != KERNEL_MAGIC {
        return Err(Error::Format("bad kernel magic".into()));
    }
    let len = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 8 * len {
        return Err(Error::Format(format!("header says {len} values, body holds {} bytes", body.len())));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn write_kernel_csv(k: &[f64], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    out.write_record(["index", "value"]).map_err(fmt)?;
    for (i, v) in k.iter().enumerate() {
        out.write_record([i.to_string(), format!("{v:e}")]).map_err(fmt)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_kernel_csv(r: impl Read) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let idx: usize = rec.get(0).unwrap_or("").parse().map_err(|_| Error::Format(format!("bad index on row {row}")))?;
        if idx != row {
            return Err(Error::Format(format!("index {idx} out of order on row {row}")));
        }
        let v: f64 = rec.get(1).unwrap_or("").parse().map_err(|_| Error::Format(format!("bad value on row {row}")))?;
        out.push(v);
    }
    Ok(out)
}
