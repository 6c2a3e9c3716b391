//! Registry of worked models: parameterized builders for the base field
//! `h^k`, the augmented chain, and the closed-form charge.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::augment::{build_chain, AugmentedChain};
use crate::degree::{charge_from_degree, Field};
use crate::error::{Error, Result};
use crate::symbolic::{parse_factor, Expr, ParseContext, VectorSymbol};

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Real,
    NonZero,
    Positive,
    /// Integer in an inclusive range.
    Integer { min: i64, max: i64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub kind: ParamKind,
    pub about: &'static str,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct Capabilities {
    pub degree: bool,
    /// Index integral; `d = 3` needs the slow path.
    pub fh: bool,
    pub flow: bool,
    /// Full-grid traces (`d = 1` only).
    pub trace: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub id: &'static str,
    pub summary: &'static str,
    pub params: Vec<ParamSpec>,
    pub expected: &'static str,
}

const fn p(name: &'static str, default: f64, kind: ParamKind, about: &'static str) -> ParamSpec {
    ParamSpec { name, default, kind, about }
}

const VARIANT: ParamSpec = p("variant", 1.0, ParamKind::Integer { min: 1, max: 2 }, "regularization: 1 (order 1) or 2 (order 2)");

/// All registered models.
pub fn list_models() -> Vec<ModelInfo> {
    use ParamKind::*;
    vec![
        ModelInfo {
            id: "dirac_d",
            summary: "Dirac operator h = (xi_1..xi_d) in dimension d",
            params: vec![p("d", 2.0, Integer { min: 1, max: 4 }, "spatial dimension")],
            expected: "+1, +1, -1, -1 for d = 1, 2, 3, 4",
        },
        ModelInfo {
            id: "dirac_scaled",
            summary: "Dirac field A·xi for a constant invertible matrix A (entries aij)",
            params: {
                let mut v = vec![p("d", 2.0, Integer { min: 1, max: 3 }, "spatial dimension")];
                for (name, def) in [
                    ("a11", 1.0),
                    ("a12", 0.0),
                    ("a13", 0.0),
                    ("a21", 0.0),
                    ("a22", 1.0),
                    ("a23", 0.0),
                    ("a31", 0.0),
                    ("a32", 0.0),
                    ("a33", 1.0),
                ] {
                    v.push(p(name, def, Real, "matrix entry (only i, j ≤ d used); det A ≠ 0"));
                }
                v
            },
            expected: "sign(det A) times the Dirac charge in dimension d",
        },
        ModelInfo {
            id: "dirac_magnetic",
            summary: "2D Dirac with constant magnetic field: h = (xi1, xi2 - b0 x1, x1)",
            params: vec![p("b0", 1.0, Real, "magnetic field strength")],
            expected: "1",
        },
        ModelInfo {
            id: "hoti_winding",
            summary: "3D hinge with walls (Re z^p, Im z^p), z = x1 + i x2",
            params: vec![p("p", 2.0, Integer { min: -4, max: 4 }, "winding of the wall pair")],
            expected: "-p",
        },
        ModelInfo {
            id: "sc1d_chem",
            summary: "1D superconductor, wall in the chemical potential",
            params: vec![
                p("mu", 1.0, NonZero, "chemical potential slope"),
                p("delta", 1.0, NonZero, "order parameter"),
                p("eta", 1.0, Positive, "inverse mass"),
                VARIANT,
            ],
            expected: "sign(mu·delta)",
        },
        ModelInfo {
            id: "sc1d_order",
            summary: "1D superconductor, wall in the order parameter",
            params: vec![
                p("mu", 1.0, NonZero, "chemical potential"),
                p("delta", 1.0, NonZero, "order parameter slope"),
                p("eta", 1.0, Positive, "inverse mass"),
            ],
            expected: "2·sign(delta) if mu > 0, else 0",
        },
        ModelInfo {
            id: "sc1d_massless_chem",
            summary: "1D superconductor at infinite mass, wall in the chemical potential",
            params: vec![
                p("mu", 1.0, NonZero, "chemical potential slope"),
                p("delta", 1.0, NonZero, "order parameter"),
            ],
            expected: "sign(mu·delta)",
        },
        ModelInfo {
            id: "pip",
            summary: "2D p+ip superconductor, wall in the chemical potential",
            params: vec![
                p("mu", 1.0, NonZero, "chemical potential slope"),
                p("d1", 1.0, NonZero, "order parameter, direction 1"),
                p("d2", 1.0, NonZero, "order parameter, direction 2"),
                p("eta", 0.5, Positive, "inverse mass"),
                VARIANT,
            ],
            expected: "-sign(mu·d1·d2)",
        },
        ModelInfo {
            id: "pwave_orderwall",
            summary: "2D p-wave superconductor, wall in the order parameter d1",
            params: vec![
                p("mu", 1.0, NonZero, "chemical potential"),
                p("d1", 1.0, NonZero, "order parameter slope, direction 1"),
                p("d2", 1.0, NonZero, "order parameter, direction 2"),
                p("eta", 1.0, Positive, "inverse mass"),
            ],
            expected: "-2·sign(d1·d2) if mu > 0, else 0",
        },
        ModelInfo {
            id: "dwave",
            summary: "2D d-wave superconductor, wall in the order parameter d1",
            params: vec![
                p("mu", 1.0, NonZero, "chemical potential"),
                p("d1", 1.0, NonZero, "order parameter slope"),
                p("d2", 1.0, NonZero, "order parameter"),
                p("eta", 1.0, Positive, "inverse mass"),
            ],
            expected: "4·sign(d1·d2) if mu > 0, else 0",
        },
        ModelInfo {
            id: "tri_sc3d",
            summary: "3D time-reversal-invariant superconductor, wall in the chemical potential",
            params: vec![
                p("mu", 1.0, NonZero, "chemical potential slope"),
                p("delta", 1.0, NonZero, "order parameter"),
                p("eta", 1.0, Positive, "inverse mass"),
            ],
            expected: "-sign(mu·delta)",
        },
        ModelInfo {
            id: "dirac_mass_reg",
            summary: "2D Dirac with regularized momentum-dependent mass",
            params: vec![p("eta", 1.0, Real, "curvature of the mass term"), VARIANT],
            expected: "1",
        },
    ]
}

pub fn model_info(id: &str) -> Result<ModelInfo> {
    list_models().into_iter().find(|m| m.id == id).ok_or_else(|| Error::UnknownModel(id.to_string()))
}

/// Fills defaults and validates admissible ranges.
pub fn resolve_params(id: &str, given: &Params) -> Result<Params> {
    let info = model_info(id)?;
    let mut out = Params::new();
    for (k, _) in given {
        if !info.params.iter().any(|p| p.name == k) {
            return Err(Error::InvalidArgument(format!("model `{id}` has no parameter `{k}`")));
        }
    }
    for spec in &info.params {
        let v = given.get(spec.name).copied().unwrap_or(spec.default);
        let ok = v.is_finite()
            && match spec.kind {
                ParamKind::Real => true,
                ParamKind::NonZero => v != 0.0,
                ParamKind::Positive => v > 0.0,
                ParamKind::Integer { min, max } => v.fract() == 0.0 && v >= min as f64 && v <= max as f64,
            };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "parameter `{}` = {v} is outside its admissible range ({:?})",
                spec.name, spec.kind
            )));
        }
        out.insert(spec.name.to_string(), v);
    }
    if id == "dirac_scaled" && scaled_matrix(&out).1 == 0.0 {
        return Err(Error::InvalidArgument("dirac_scaled needs det A ≠ 0".into()));
    }
    Ok(out)
}

fn sgn(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Charge of the Dirac operator in dimension `d`.
pub fn dirac_sign(d: usize) -> i64 {
    charge_from_degree(1, d)
}

fn scaled_matrix(p: &Params) -> (Vec<f64>, f64) {
    let d = p["d"] as usize;
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] = p[&format!("a{}{}", i + 1, j + 1)];
        }
    }
    let det = crate::linalg::real_det(&a, d);
    (a, det)
}

/// Closed-form charge.
pub fn expected_charge(id: &str, given: &Params) -> Result<i64> {
    let p = resolve_params(id, given)?;
    let g = |k: &str| p[k];
    Ok(match id {
        "dirac_d" => dirac_sign(g("d") as usize),
        "dirac_scaled" => sgn(scaled_matrix(&p).1) * dirac_sign(g("d") as usize),
        "dirac_magnetic" | "dirac_mass_reg" => 1,
        "hoti_winding" => -(g("p") as i64),
        "sc1d_chem" | "sc1d_massless_chem" => sgn(g("mu") * g("delta")),
        "sc1d_order" => {
            if g("mu") > 0.0 {
                2 * sgn(g("delta"))
            } else {
                0
            }
        }
        "pip" => -sgn(g("mu") * g("d1") * g("d2")),
        "pwave_orderwall" => {
            if g("mu") > 0.0 {
                -2 * sgn(g("d1") * g("d2"))
            } else {
                0
            }
        }
        "dwave" => {
            if g("mu") > 0.0 {
                4 * sgn(g("d1") * g("d2"))
            } else {
                0
            }
        }
        "tri_sc3d" => -sgn(g("mu") * g("delta")),
        _ => return Err(Error::UnknownModel(id.to_string())),
    })
}

/// `Re` and `Im` of `(x1 + i x2)^p` (`p ≥ 0`) or `conj(x1 + i x2)^{|p|}`.
fn winding_walls(p: i64) -> (String, String) {
    if p == 0 {
        return ("1".into(), "0".into());
    }
    let n = p.unsigned_abs();
    let binom = |k: u64| (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1));
    let mut re = Vec::new();
    let mut im = Vec::new();
    for k in 0..=n {
        // i^k x1^{n−k} x2^k
        let c = binom(k) as f64;
        let mono = format!("{c}*x1^{}*x2^{k}", n - k);
        match k % 4 {
            0 => re.push(format!("+{mono}")),
            1 => im.push(format!("+{mono}")),
            2 => re.push(format!("-{mono}")),
            _ => im.push(format!("-{mono}")),
        }
    }
    let join = |v: Vec<String>| {
        let s = v.concat();
        match s.strip_prefix('+') {
            Some(rest) => rest.to_string(),
            None if s.is_empty() => "0".to_string(),
            None => s,
        }
    };
    let (re, im) = (join(re), join(im));
    if p < 0 {
        (re, format!("-({im})"))
    } else {
        (re, im)
    }
}

/// A built model: base field, chain and metadata.
#[derive(Debug, Clone)]
pub struct Model {
    pub id: String,
    pub params: Params,
    pub eps: f64,
    /// Typical parameter magnitude, used for radii and perturbation sizes.
    pub scale: f64,
    pub field: VectorSymbol,
    pub walls: BTreeMap<usize, Expr>,
    pub chain: AugmentedChain,
    pub expected: Option<i64>,
}

impl Model {
    /// Wraps a user-supplied field.
    pub fn from_field(id: &str, field: VectorSymbol, params: Params, walls: BTreeMap<usize, Expr>) -> Result<Self> {
        let chain = build_chain(&field, &walls)?;
        let scale = param_scale(&params);
        let eps = field.eps.unwrap_or(0.2 / scale);
        Ok(Model { id: id.to_string(), params, eps, scale, field, walls, chain, expected: None })
    }

    pub fn d(&self) -> usize {
        self.field.d
    }

    pub fn capabilities(&self) -> Capabilities {
        let d = self.d();
        let h = &self.chain.hamiltonian;
        Capabilities {
            degree: true,
            fh: d <= 3,
            flow: d <= 3 && crate::spectral::flow_support(h).is_ok(),
            trace: crate::spectral::trace_support(h).is_ok(),
        }
    }

    /// Charge from the degree of the base field.
    pub fn degree_charge(&self, deg: i64) -> i64 {
        charge_from_degree(deg, self.d())
    }

    pub fn base_field(&self) -> &dyn Field {
        &self.field
    }
}

fn param_scale(p: &Params) -> f64 {
    p.iter()
        .filter(|(k, _)| !matches!(k.as_str(), "d" | "p" | "variant"))
        .map(|(_, v)| v.abs())
        .fold(1.0, f64::max)
}

/// Builds the regularized field and its chain. `eps` overrides the default
/// `0.2 / scale`.
pub fn build_model(id: &str, given: &Params, eps: Option<f64>) -> Result<Model> {
    let params = resolve_params(id, given)?;
    let scale = param_scale(&params);
    let eps = eps.unwrap_or(0.2 / scale);
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let mut ctx = ParseContext::new(4);
    for (k, v) in &params {
        ctx = ctx.with_param(k, *v);
    }
    ctx = ctx.with_param("eps", eps);
    let variant = params.get("variant").copied().unwrap_or(1.0) as u32;
    let (d, k, m, comps): (usize, usize, u32, Vec<String>) = match id {
        "dirac_d" => {
            let d = params["d"] as usize;
            (d, 0, 1, (1..=d).map(|i| format!("xi{i}")).collect())
        }
        "dirac_scaled" => {
            let d = params["d"] as usize;
            let comps = (1..=d)
                .map(|i| (1..=d).map(|j| format!("a{i}{j}*xi{j}")).collect::<Vec<_>>().join(" + "))
                .collect();
            (d, 0, 1, comps)
        }
        "dirac_magnetic" => (2, 1, 1, vec!["xi1".into(), "xi2 - b0*x1".into(), "x1".into()]),
        "hoti_winding" => {
            let (re, im) = winding_walls(params["p"] as i64);
            (3, 2, 1, vec!["xi1".into(), "xi2".into(), "xi3".into(), re, im])
        }
        "sc1d_chem" if variant == 1 => {
            (1, 1, 1, vec!["eta*snorm_inv(xi1; eps)*xi1^2 - mu*x1".into(), "delta*xi1".into()])
        }
        "sc1d_chem" => (
            1,
            1,
            2,
            vec!["eta*xi1^2 - mu*x1*snorm(x1; eps)".into(), "delta*xi1*snorm(xi1; eps)".into()],
        ),
        "sc1d_order" => (1, 1, 2, vec!["eta*xi1^2 - mu*snorm(x1; eps)^2".into(), "delta*xi1*x1".into()]),
        "sc1d_massless_chem" => (1, 1, 1, vec!["-mu*x1".into(), "delta*xi1".into()]),
        "pip" if variant == 1 => (
            2,
            1,
            1,
            vec![
                "d1*xi1".into(),
                "d2*xi2".into(),
                "eta*snorm_inv(xi; eps)*(xi1^2 + xi2^2) - mu*x1".into(),
            ],
        ),
        "pip" => (
            2,
            1,
            2,
            vec![
                "d1*xi1*snorm(xi1; eps)".into(),
                "d2*xi2*snorm(xi2; eps)".into(),
                "eta*(xi1^2 + xi2^2) - mu*x1*snorm(x1; eps)".into(),
            ],
        ),
        "pwave_orderwall" => (
            2,
            1,
            2,
            vec![
                "d1*xi1*x1".into(),
                "d2*xi2*snorm(xi2; eps)".into(),
                "eta*(xi1^2 + xi2^2) - mu*snorm(x1; eps)^2".into(),
            ],
        ),
        "dwave" => (
            2,
            1,
            2,
            vec![
                "d1*x1*snorm_inv(x1; eps)*xi1*xi2".into(),
                "d2*(xi1^2 - xi2^2)".into(),
                "eta*(xi1^2 + xi2^2) - mu*snorm(x1; eps)^2".into(),
            ],
        ),
        "tri_sc3d" => (
            3,
            1,
            1,
            vec![
                "delta*xi1".into(),
                "delta*xi2".into(),
                "delta*xi3".into(),
                "mu*x1 - eta*snorm_inv(xi; eps)*(xi1^2 + xi2^2 + xi3^2)".into(),
            ],
        ),
        "dirac_mass_reg" if variant == 1 => {
            (2, 1, 1, vec!["xi1".into(), "xi2".into(), "x1 - eta*snorm_inv(xi; eps)*(xi1^2 + xi2^2)".into()])
        }
        "dirac_mass_reg" => (
            2,
            1,
            2,
            vec![
                "snorm(xi; eps)*xi1".into(),
                "snorm(xi; eps)*xi2".into(),
                "snorm(x1; eps)*x1 - eta*(xi1^2 + xi2^2)".into(),
            ],
        ),
        _ => return Err(Error::UnknownModel(id.to_string())),
    };
    ctx.dim = d;
    let exprs = comps.iter().map(|s| parse_factor(s, &ctx)).collect::<Result<Vec<_>>>()?;
    let mut field = VectorSymbol::new(d, k, m, exprs)?;
    field.eps = Some(eps);
    let walls = BTreeMap::new();
    let chain = build_chain(&field, &walls)?;
    let expected = Some(expected_charge(id, &params)?);
    Ok(Model { id: id.to_string(), params, eps, scale, field, walls, chain, expected })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, f64)]) -> Params {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn registry_examples() {
        assert_eq!(expected_charge("pip", &params(&[("mu", 1.0), ("d1", 1.0), ("d2", 1.0), ("eta", 0.5)])).unwrap(), -1);
        assert_eq!(expected_charge("sc1d_order", &params(&[("mu", -1.0), ("delta", 1.0), ("eta", 1.0)])).unwrap(), 0);
        assert_eq!(expected_charge("hoti_winding", &params(&[("p", 0.0)])).unwrap(), 0);
        assert_eq!(expected_charge("hoti_winding", &params(&[("p", -2.0)])).unwrap(), 2);
        let dirac: Vec<i64> = (1..=4).map(|d| expected_charge("dirac_d", &params(&[("d", d as f64)])).unwrap()).collect();
        assert_eq!(dirac, vec![1, 1, -1, -1]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(expected_charge("nope", &Params::new()), Err(Error::UnknownModel(_))));
        assert!(expected_charge("sc1d_chem", &params(&[("mu", 0.0)])).is_err());
        assert!(expected_charge("pip", &params(&[("eta", -1.0)])).is_err());
        assert!(expected_charge("dirac_d", &params(&[("d", 5.0)])).is_err());
        assert!(expected_charge("pip", &params(&[("delta", 1.0)])).is_err());
        assert!(expected_charge("dirac_scaled", &params(&[("a11", 1.0), ("a12", 2.0), ("a21", 1.0), ("a22", 2.0)])).is_err());
    }

    #[test]
    fn fields_match_printed_forms() {
        let m = build_model("sc1d_chem", &Params::new(), Some(0.5)).unwrap();
        assert_eq!(m.field.components.len(), 2);
        // η⟨ξ⟩⁻¹ξ² − μx at ξ = 4 (ε ξ = 2, so ⟨ξ⟩ = 2), x = 1
        let mut out = [0.0; 2];
        m.field.eval(&[4.0, 1.0], &mut out);
        assert!((out[0] - (16.0 / 2.0 - 1.0)).abs() < 1e-12);
        assert!((out[1] - 4.0).abs() < 1e-12);
        let m = build_model("dirac_magnetic", &params(&[("b0", 2.0)]), None).unwrap();
        let mut out = [0.0; 3];
        m.field.eval(&[0.5, 1.0, 3.0], &mut out);
        assert_eq!(out, [0.5, 1.0 - 6.0, 3.0]);
        let m = build_model("dwave", &Params::new(), Some(0.2)).unwrap();
        assert_eq!(m.chain.top().components.len(), 4);
        assert_eq!(m.chain.spinor_dims, vec![2, 4]);
    }

    #[test]
    fn winding_walls_match_complex_powers() {
        use num_complex::Complex64 as C64;
        for p in -3..=3i64 {
            let m = build_model("hoti_winding", &params(&[("p", p as f64)]), None).unwrap();
            let (x1, x2) = (0.7, -0.4);
            let z = C64::new(x1, x2);
            let w = if p >= 0 { z.powi(p as i32) } else { z.conj().powi((-p) as i32) };
            let mut out = [0.0; 5];
            m.field.eval(&[0.0, 0.0, 0.0, x1, x2], &mut out);
            assert!((out[3] - w.re).abs() < 1e-12 && (out[4] - w.im).abs() < 1e-12, "p={p}");
        }
    }
}
