//! Per-method results and the cross-method charge report.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog::{Model, Params};
use crate::degree::{degree, DegreeOptions};
use crate::error::{Error, Result};
use crate::fhindex::{fh_index, FhOptions};
use crate::spectral::{sigma_trace, spectral_flow, toeplitz_trace, SpectralModel};
use crate::symbolic::SeparableMatrixSymbol;

/// Identifier of the report layout; bumped on incompatible changes.
pub const SCHEMA: &str = "topocharge-report/1";
/// Largest residual an agreeing result may carry.
pub const AGREE_RESIDUAL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Degree,
    Fh,
    Flow,
    Sigma,
    Toeplitz,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Degree, Method::Fh, Method::Flow, Method::Sigma, Method::Toeplitz];

    pub fn name(self) -> &'static str {
        match self {
            Method::Degree => "degree",
            Method::Fh => "fh",
            Method::Flow => "flow",
            Method::Sigma => "sigma",
            Method::Toeplitz => "toeplitz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Agree,
    Disagree,
    Partial,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodResult {
    pub method: Method,
    pub value: f64,
    pub rounded: Option<i64>,
    pub residual: f64,
    pub diagnostics: Value,
    /// Seconds; absent in reproducible runs.
    pub wall_clock_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodFailure {
    pub method: Method,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChargeReport {
    pub schema: &'static str,
    pub version: &'static str,
    pub model: String,
    pub params: Params,
    pub eps: Option<f64>,
    /// Closed-form charge, for catalog models.
    pub expected: Option<i64>,
    pub results: Vec<MethodResult>,
    pub failures: Vec<MethodFailure>,
    pub verdict: Verdict,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub radius: Option<f64>,
    pub level: Option<usize>,
    pub basis: Option<usize>,
    pub grid: Option<usize>,
    pub xi_max: Option<f64>,
    /// Allow the `d = 3` index integral.
    pub slow: bool,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: DegreeOptions::default().seed,
            radius: None,
            level: None,
            basis: None,
            grid: None,
            xi_max: None,
            slow: false,
            timing: true,
        }
    }
}

/// `agree` iff every result rounds, all rounded values coincide, every
/// residual is within [`AGREE_RESIDUAL`] and nothing failed; `disagree` as soon
/// as two rounded values differ.
pub fn verdict(results: &[MethodResult], failures: &[MethodFailure]) -> Verdict {
    let mut rounded = results.iter().filter_map(|r| r.rounded);
    if let Some(first) = rounded.next() {
        if rounded.any(|v| v != first) {
            return Verdict::Disagree;
        }
    }
    let clean = results.iter().all(|r| r.rounded.is_some() && r.residual <= AGREE_RESIDUAL);
    if !results.is_empty() && clean && failures.is_empty() {
        Verdict::Agree
    } else {
        Verdict::Partial
    }
}

fn integer_result(method: Method, value: i64, diagnostics: Value) -> MethodResult {
    MethodResult { method, value: value as f64, rounded: Some(value), residual: 0.0, diagnostics, wall_clock_s: None }
}

fn real_result(method: Method, value: f64, diagnostics: Value) -> MethodResult {
    let r = value.round();
    MethodResult {
        method,
        value,
        rounded: Some(r as i64),
        residual: (value - r).abs(),
        diagnostics,
        wall_clock_s: None,
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn spectral_model(model: &Model, opts: &RunOptions) -> SpectralModel {
    let mut sm = SpectralModel::new(model.chain.hamiltonian.clone(), model.scale);
    if let Some(b) = opts.basis {
        sm.basis = b;
    }
    if let Some(x) = opts.xi_max {
        sm.xi_max = x;
    }
    if let Some(g) = opts.grid {
        sm.grid_n = g;
    }
    sm
}

/// Index integral of a Fredholm symbol given directly.
pub fn fh_on_symbol(a: &SeparableMatrixSymbol, scale: f64, opts: &RunOptions) -> Result<MethodResult> {
    if a.d > 3 {
        return Err(Error::Capability(format!("index integral supports d ≤ 3, got d = {}", a.d)));
    }
    if a.d == 3 && !opts.slow {
        return Err(Error::Capability("the d = 3 index integral is slow; pass --slow".into()));
    }
    let t = Instant::now();
    let r = fh_index(a, &FhOptions { radius: opts.radius, scale, level: opts.level })?;
    let mut out = MethodResult {
        method: Method::Fh,
        value: r.value,
        rounded: r.rounded,
        residual: r.residual,
        diagnostics: to_value(&r),
        wall_clock_s: None,
    };
    if opts.timing {
        out.wall_clock_s = Some(t.elapsed().as_secs_f64());
    }
    Ok(out)
}

/// Runs one method on a model.
pub fn run_method(model: &Model, method: Method, opts: &RunOptions) -> Result<MethodResult> {
    let caps = model.capabilities();
    let t = Instant::now();
    let mut out = match method {
        Method::Degree => {
            let dopts = DegreeOptions { scale: model.scale, radius: opts.radius, seed: opts.seed, ..Default::default() };
            let r = degree(model.base_field(), &dopts)?;
            let charge = model.degree_charge(r.value);
            integer_result(method, charge, json!({ "degree": r.value, "detail": to_value(&r) }))
        }
        Method::Fh => {
            if !caps.fh {
                return Err(Error::Capability(format!("index integral supports d ≤ 3, got d = {}", model.d())));
            }
            return fh_on_symbol(&model.chain.fredholm_symbol, model.scale, opts);
        }
        Method::Flow => {
            let r = spectral_flow(&spectral_model(model, opts))?;
            integer_result(method, r.value, to_value(&r))
        }
        Method::Sigma | Method::Toeplitz => {
            let sm = spectral_model(model, opts);
            let r = if method == Method::Sigma { sigma_trace(&sm)? } else { toeplitz_trace(&sm)? };
            real_result(method, r.value, to_value(&r))
        }
    };
    if opts.timing {
        out.wall_clock_s = Some(t.elapsed().as_secs_f64());
    }
    Ok(out)
}

/// Methods that apply to the model by its capability flags.
pub fn applicable(model: &Model, opts: &RunOptions) -> Vec<Method> {
    let caps = model.capabilities();
    let mut v = vec![Method::Degree];
    if caps.fh && (model.d() <= 2 || opts.slow) {
        v.push(Method::Fh);
    }
    if caps.flow {
        v.push(Method::Flow);
    }
    if caps.trace {
        v.extend([Method::Sigma, Method::Toeplitz]);
    }
    v
}

/// Runs `methods` and assembles the report.
pub fn report(model: &Model, methods: &[Method], opts: &RunOptions) -> ChargeReport {
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for &m in methods {
        match run_method(model, m, opts) {
            Ok(r) => results.push(r),
            Err(e) => failures.push(MethodFailure { method: m, error: e.to_string() }),
        }
    }
    let verdict = verdict(&results, &failures);
    ChargeReport {
        schema: SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        model: model.id.clone(),
        params: model.params.clone(),
        eps: Some(model.eps),
        expected: model.expected,
        results,
        failures,
        verdict,
        seeds: vec![opts.seed],
    }
}

/// Every applicable method.
pub fn verify(model: &Model, opts: &RunOptions) -> ChargeReport {
    report(model, &applicable(model, opts), opts)
}
