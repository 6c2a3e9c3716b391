//! JSON model files.
//!
//! A vector field is `{"d", "k", "m", "params", "components": [..]}`; a matrix
//! symbol is `{"d", "params", "terms": [{"x", "xi", "coeff": [[re, im], ..]}]}`
//! with `coeff` listing the `n × n` entries row by row.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Deserialize;

use super::{parse_factor, ParseContext, SeparableMatrixSymbol, Term, VectorSymbol};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    d: usize,
    #[serde(default)]
    k: usize,
    #[serde(default = "one")]
    m: u32,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    components: Option<Vec<String>>,
    terms: Option<Vec<RawTerm>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    #[serde(default = "unit")]
    x: String,
    #[serde(default = "unit")]
    xi: String,
    coeff: Vec<[f64; 2]>,
}

fn one() -> u32 {
    1
}

fn unit() -> String {
    "1".into()
}

#[derive(Debug, Clone)]
pub enum ModelFile {
    Vector { field: VectorSymbol, params: BTreeMap<String, f64> },
    Matrix { symbol: SeparableMatrixSymbol, params: BTreeMap<String, f64> },
}

/// Parses a model file; `overrides` replace or add named parameters before
/// the expressions are read.
pub fn parse_model_file(text: &str, overrides: &BTreeMap<String, f64>) -> Result<ModelFile> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("model file: {e}")))?;
    let mut params = raw.params.clone();
    params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
    let mut ctx = ParseContext::new(raw.d);
    for (k, v) in &params {
        ctx = ctx.with_param(k, *v);
    }
    match (raw.components, raw.terms) {
        (Some(c), None) => {
            let srcs: Vec<&str> = c.iter().map(String::as_str).collect();
            let field = VectorSymbol::parse(raw.d, raw.k, raw.m, &ctx, &srcs)?;
            Ok(ModelFile::Vector { field, params })
        }
        (None, Some(ts)) => {
            let mut terms = Vec::with_capacity(ts.len());
            for t in ts {
                let n = (t.coeff.len() as f64).sqrt().round() as usize;
                if n == 0 || n * n != t.coeff.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "coeff has {} entries, not a square count",
                        t.coeff.len()
                    )));
                }
                let coeff = Array2::from_shape_fn((n, n), |(r, c)| {
                    let [re, im] = t.coeff[r * n + c];
                    C64::new(re, im)
                });
                terms.push(Term { x: parse_factor(&t.x, &ctx)?, xi: parse_factor(&t.xi, &ctx)?, coeff });
            }
            Ok(ModelFile::Matrix { symbol: SeparableMatrixSymbol::from_terms(raw.d, terms)?, params })
        }
        _ => Err(Error::InvalidArgument("model file needs exactly one of `components` and `terms`".into())),
    }
}
