//! Index of an elliptic matrix symbol from the winding integral of
//! `tr (a⁻¹ da)^{2d−1}` over a large phase-space sphere.
//!
//! Phase space is ordered `(ξ_1, x_1, ξ_2, x_2, …)`; the sphere carries the
//! boundary orientation of `dξ_1 ∧ dx_1 ∧ … ∧ dξ_d ∧ dx_d`.

pub mod quadrature;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

pub use quadrature::{gauss_legendre, sphere_area, sphere_quadrature, SphereQuadrature};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, ComplexLu};
use crate::symbolic::SeparableMatrixSymbol;

/// Relative change allowed between refinements and radii.
pub const STABILITY_TOL: f64 = 0.05;
/// Largest distance to an integer that is still rounded.
pub const ROUNDING_TOL: f64 = 0.1;

/// Sphere `S^{2d−1}` quadrature for refinement `level`.
pub fn build_quadrature(d: usize, level: usize) -> Result<SphereQuadrature> {
    match d {
        1 => sphere_quadrature(2, 0, 64 * (level + 1)),
        2 => {
            let t = 12 * (level + 1);
            sphere_quadrature(4, t, 2 * t)
        }
        3 => {
            let t = 6 * (level + 1);
            sphere_quadrature(6, t, 2 * t)
        }
        _ => Err(Error::InvalidArgument(format!("index integral supports d ∈ {{1, 2, 3}}, got {d}"))),
    }
}

/// Default refinement level per dimension.
pub fn default_level(d: usize) -> usize {
    match d {
        1 => 1,
        2 => 2,
        _ => 0,
    }
}

/// Splits an interleaved phase-space point into `(x, ξ)`.
fn split(d: usize, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let xi = (0..d).map(|i| u[2 * i]).collect();
    let x = (0..d).map(|i| u[2 * i + 1]).collect();
    (x, xi)
}

/// `Σ_ρ sgn ρ · tr Π_j B_{ρ_j}` over permutations of the given matrices.
pub fn antisymmetrized_trace(b: &[Array2<C64>]) -> C64 {
    let k = b.len();
    if k == 0 {
        return C64::new(0.0, 0.0);
    }
    let n = b[0].nrows();
    let mut table: Vec<Option<Array2<C64>>> = vec![None; 1 << k];
    table[0] = Some(Array2::eye(n).mapv(|v: f64| C64::new(v, 0.0)));
    for mask in 1usize..(1 << k) {
        let mut acc = Array2::<C64>::zeros((n, n));
        for j in 0..k {
            if mask & (1 << j) == 0 {
                continue;
            }
            let above = (mask >> (j + 1)).count_ones();
            let prev = table[mask & !(1 << j)].as_ref().unwrap();
            let prod = prev.dot(&b[j]);
            if above % 2 == 0 {
                acc += &prod;
            } else {
                acc -= &prod;
            }
        }
        table[mask] = Some(acc);
    }
    table[(1 << k) - 1].as_ref().unwrap().diag().sum()
}

/// Integrand `Σ_ρ sgn ρ · tr Π_j a⁻¹ ∂_{t_{ρ_j}} a` at phase-space point `u`
/// (interleaved coordinates) with tangent frame `frame` (each of length `2d`).
pub fn pullback_form(a: &SeparableMatrixSymbol, u: &[f64], frame: &[&[f64]]) -> Result<C64> {
    Ok(pullback_detail(a, u, frame)?.0)
}

/// Integrand, an estimate `1/‖a⁻¹‖_F` of the smallest singular value, and `‖a‖_F`.
fn pullback_detail(a: &SeparableMatrixSymbol, u: &[f64], frame: &[&[f64]]) -> Result<(C64, f64, f64)> {
    let d = a.d;
    if u.len() != 2 * d || frame.iter().any(|t| t.len() != 2 * d) {
        return Err(Error::DimensionMismatch(format!("phase-space point must have {} coordinates", 2 * d)));
    }
    let (x, xi) = split(d, u);
    let (val, grads) = a.eval_grad(&x, &xi);
    let lu = ComplexLu::new(&val.view());
    let inv = lu.inverse().ok_or_else(|| Error::Singular { location: u.to_vec() })?;
    let inv_norm = frobenius(&inv.view());
    if !inv_norm.is_finite() {
        return Err(Error::Singular { location: u.to_vec() });
    }
    let b: Vec<Array2<C64>> = frame
        .iter()
        .map(|t| {
            let mut da = Array2::<C64>::zeros((a.n, a.n));
            for i in 0..d {
                if t[2 * i] != 0.0 {
                    da.scaled_add(C64::new(t[2 * i], 0.0), &grads[d + i]);
                }
                if t[2 * i + 1] != 0.0 {
                    da.scaled_add(C64::new(t[2 * i + 1], 0.0), &grads[i]);
                }
            }
            inv.dot(&da)
        })
        .collect();
    Ok((antisymmetrized_trace(&b), 1.0 / inv_norm, frobenius(&val.view())))
}

/// `−(d−1)! / ((2πi)^d (2d−1)!)`.
fn prefactor(d: usize) -> C64 {
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let two_pi_i = C64::new(0.0, 2.0 * std::f64::consts::PI);
    -C64::new(fact(d - 1) / fact(2 * d - 1), 0.0) / two_pi_i.powu(d as u32)
}

#[derive(Debug, Clone, Serialize)]
pub struct FhIntegral {
    pub value: f64,
    /// Imaginary part of the integral; should vanish.
    pub imag: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub level: usize,
    pub nodes: usize,
    /// Smallest `1/‖a⁻¹‖_F` over the nodes.
    pub min_inverse_scale: f64,
}

/// Single evaluation of the index integral at radius `R` and `level`.
pub fn fh_integral(a: &SeparableMatrixSymbol, radius: f64, level: usize) -> Result<FhIntegral> {
    let d = a.d;
    let q = build_quadrature(d, level)?;
    let dim = 2 * d;
    let vals: Vec<Result<(C64, f64, f64)>> = (0..q.len())
        .into_par_iter()
        .map(|i| {
            let u: Vec<f64> = q.node(i).iter().map(|v| v * radius).collect();
            let frame: Vec<&[f64]> = (0..dim - 1).map(|j| q.tangent(i, j)).collect();
            let (pf, s, an) = pullback_detail(a, &u, &frame)?;
            Ok((pf * q.weights[i], s, an))
        })
        .collect();
    let mut total = C64::new(0.0, 0.0);
    let mut min_s = f64::INFINITY;
    let mut worst = 0;
    let mut max_a: f64 = 0.0;
    for (i, v) in vals.into_iter().enumerate() {
        let (pf, s, an) = v?;
        total += pf;
        if s < min_s {
            min_s = s;
            worst = i;
        }
        max_a = max_a.max(an);
    }
    // Invertibility pre-scan: a nearly singular node means R is too small.
    if min_s <= 1e-10 * max_a {
        return Err(Error::Singular { location: q.node(worst).iter().map(|v| v * radius).collect() });
    }
    let value = prefactor(d) * total * radius.powi(dim as i32 - 1);
    Ok(FhIntegral { value: value.re, imag: value.im, radius, level, nodes: q.len(), min_inverse_scale: min_s })
}

#[derive(Debug, Clone, Serialize)]
pub struct FhResult {
    pub value: f64,
    pub rounded: Option<i64>,
    pub residual: f64,
    /// `|I(level) − I(level+1)|`.
    pub refinement_change: f64,
    /// `|I(R) − I(1.5R)|`.
    pub radius_change: f64,
    pub integral: FhIntegral,
}

#[derive(Debug, Clone)]
pub struct FhOptions {
    /// Fixed radius; otherwise starts at `2·scale` and doubles past singular nodes.
    pub radius: Option<f64>,
    pub scale: f64,
    pub level: Option<usize>,
}

impl Default for FhOptions {
    fn default() -> Self {
        FhOptions { radius: None, scale: 1.0, level: None }
    }
}

/// Index integral with refinement and radius stability checks.
pub fn fh_index(a: &SeparableMatrixSymbol, opts: &FhOptions) -> Result<FhResult> {
    let level = opts.level.unwrap_or_else(|| default_level(a.d));
    let mut radius = opts.radius.unwrap_or(2.0 * opts.scale);
    let mut growth = 0;
    let (base, fine, wide) = loop {
        let attempt = fh_integral(a, radius, level).and_then(|b| {
            let f = fh_integral(a, radius, level + 1)?;
            let w = fh_integral(a, 1.5 * radius, level)?;
            Ok((b, f, w))
        });
        match attempt {
            Ok(v) => break v,
            Err(Error::Singular { .. }) if opts.radius.is_none() && growth < 4 => {
                radius *= 2.0;
                growth += 1;
            }
            Err(e) => return Err(e),
        }
    };
    let refinement_change = (base.value - fine.value).abs();
    let radius_change = (base.value - wide.value).abs();
    if refinement_change >= STABILITY_TOL || radius_change >= STABILITY_TOL {
        return Err(Error::NotConverged(format!(
            "value {:.4} changes by {refinement_change:.3e} under refinement and {radius_change:.3e} under R → 1.5R",
            base.value
        )));
    }
    let residual = (base.value - base.value.round()).abs();
    Ok(FhResult {
        value: base.value,
        rounded: (residual <= ROUNDING_TOL).then_some(base.value.round() as i64),
        residual,
        refinement_change,
        radius_change,
        integral: base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use crate::symbolic::{parse_factor, ParseContext, Term};

    fn scalar(d: usize, terms: &[(&str, &str, C64)]) -> SeparableMatrixSymbol {
        let ctx = ParseContext::new(d);
        let terms = terms
            .iter()
            .map(|(x, xi, c)| Term {
                x: parse_factor(x, &ctx).unwrap(),
                xi: parse_factor(xi, &ctx).unwrap(),
                coeff: identity(1) * *c,
            })
            .collect();
        SeparableMatrixSymbol::from_terms(d, terms).unwrap()
    }

    #[test]
    fn orientation_anchor() {
        let a = scalar(1, &[("1", "xi1", C64::new(1.0, 0.0)), ("x1", "1", C64::new(0.0, -1.0))]);
        let q = build_quadrature(1, 0).unwrap();
        for i in 0..q.len() {
            let pf = pullback_form(&a, q.node(i), &[q.tangent(i, 0)]).unwrap();
            assert!((pf - C64::new(0.0, -1.0)).norm() < 1e-14);
        }
        let r = fh_index(&a, &FhOptions::default()).unwrap();
        assert_eq!(r.rounded, Some(1));
        assert!(r.residual < 1e-12);
        let b = scalar(1, &[("1", "xi1", C64::new(1.0, 0.0)), ("x1", "1", C64::new(0.0, 1.0))]);
        assert_eq!(fh_index(&b, &FhOptions::default()).unwrap().rounded, Some(-1));
    }

    #[test]
    fn constant_symbol_has_zero_index() {
        let a = scalar(1, &[("1", "1", C64::new(2.0, 1.0))]);
        let r = fh_index(&a, &FhOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn permutation_count() {
        // With commuting scalar B's the antisymmetrized sum vanishes; with
        // a single matrix it is its trace.
        let b = vec![identity(2); 3];
        assert!(antisymmetrized_trace(&b).norm() < 1e-14);
        let m = identity(2) * C64::new(0.5, 0.0);
        assert!((antisymmetrized_trace(&[m]) - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_node_reports_location() {
        let a = scalar(1, &[("1", "xi1", C64::new(1.0, 0.0))]);
        match fh_integral(&a, 1.0, 0) {
            Err(Error::Singular { location }) => assert!(location[0].abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
