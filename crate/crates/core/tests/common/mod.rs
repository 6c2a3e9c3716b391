//! Shared helpers: an independent table of closed-form charges and parameter
//! draws covering every sign sector of each model.
#![allow(dead_code)]

pub mod suites;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topocharge::catalog::{list_models, ModelInfo, ParamKind, Params};

fn sgn(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else {
        -1
    }
}

/// Charges as stated for the worked examples, written out independently of
/// the registry.
pub fn closed_form(id: &str, p: &Params) -> i64 {
    let g = |k: &str| p[k];
    let dirac = |d: f64| if matches!(d as i64 % 4, 1 | 2) { 1 } else { -1 };
    match id {
        "dirac_d" => dirac(g("d")),
        "dirac_scaled" => {
            let d = g("d") as usize;
            let a: Vec<Vec<f64>> = (1..=d).map(|i| (1..=d).map(|j| p[&format!("a{i}{j}")]).collect()).collect();
            sgn(det(a)) * dirac(g("d"))
        }
        "dirac_magnetic" | "dirac_mass_reg" => 1,
        "hoti_winding" => -(g("p") as i64),
        "sc1d_chem" | "sc1d_massless_chem" => sgn(g("mu") * g("delta")),
        "sc1d_order" => if g("mu") > 0.0 { 2 * sgn(g("delta")) } else { 0 },
        "pip" => -sgn(g("mu") * g("d1") * g("d2")),
        "pwave_orderwall" => if g("mu") > 0.0 { -2 * sgn(g("d1") * g("d2")) } else { 0 },
        "dwave" => if g("mu") > 0.0 { 4 * sgn(g("d1") * g("d2")) } else { 0 },
        "tri_sc3d" => -sgn(g("mu") * g("delta")),
        other => panic!("no closed form for {other}"),
    }
}

/// Cofactor expansion; only used for tiny matrices.
pub fn det(a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    (0..n)
        .map(|c| {
            let minor = a[1..].iter().map(|r| r.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, v)| *v).collect()).collect();
            let s = if c % 2 == 0 { 1.0 } else { -1.0 };
            s * a[0][c] * det(minor)
        })
        .sum()
}

/// Sign sectors and discrete values of the parameters, with `draws` random
/// magnitudes in each. Winding numbers are limited to `p ∈ −2..=3`.
pub fn sector_draws(info: &ModelInfo, draws: usize, seed: u64) -> Vec<Params> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    if info.id == "dirac_scaled" {
        for d in 1..=3usize {
            for want in [1.0, -1.0] {
                for _ in 0..draws {
                    loop {
                        let mut p = Params::new();
                        p.insert("d".into(), d as f64);
                        for i in 1..=3 {
                            for j in 1..=3 {
                                let v = if i <= d && j <= d { rng.gen_range(-2.0..2.0) } else if i == j { 1.0 } else { 0.0 };
                                p.insert(format!("a{i}{j}"), v);
                            }
                        }
                        let a = (1..=d).map(|i| (1..=d).map(|j| p[&format!("a{i}{j}")]).collect()).collect();
                        let dt = det(a);
                        if dt * want >= 0.2 {
                            out.push(p);
                            break;
                        }
                    }
                }
            }
        }
        return out;
    }
    // discrete choices per parameter: signs, or integer values
    let choices: Vec<Vec<f64>> = info
        .params
        .iter()
        .map(|s| match s.kind {
            ParamKind::NonZero | ParamKind::Real => vec![1.0, -1.0],
            ParamKind::Positive => vec![1.0],
            ParamKind::Integer { min, max } => {
                let (lo, hi) = if s.name == "p" { (min.max(-2), max.min(3)) } else { (min, max) };
                (lo..=hi).map(|v| v as f64).collect()
            }
        })
        .collect();
    let mut idx = vec![0usize; choices.len()];
    loop {
        for _ in 0..draws {
            let mut p = Params::new();
            for (k, s) in info.params.iter().enumerate() {
                let c = choices[k][idx[k]];
                let v = match s.kind {
                    ParamKind::Integer { .. } => c,
                    _ => c * (rng.gen_range(0.3f64.ln()..3.0f64.ln())).exp(),
                };
                p.insert(s.name.to_string(), v);
            }
            out.push(p);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn models() -> Vec<ModelInfo> {
    list_models()
}
