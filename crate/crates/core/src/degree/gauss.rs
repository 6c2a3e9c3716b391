//! Degree as the normalized surface integral of the Gauss map `h/|h|`.

use rayon::prelude::*;
use serde::Serialize;

use super::field::Field;
use crate::error::{Error, Result};
use crate::fhindex::quadrature::{sphere_area, sphere_quadrature};
use crate::linalg::real_det;

#[derive(Debug, Clone, Serialize)]
pub struct GaussMapResult {
    pub value: f64,
    pub rounded: Option<i64>,
    pub residual: f64,
    pub nodes: usize,
}

/// Polar and azimuthal node counts for a refinement level.
fn sizes(n: usize, level: usize) -> (usize, usize) {
    let base = match n {
        2 => 64,
        3 => 24,
        4 => 12,
        _ => 6,
    };
    let t = base << level.min(6);
    (t, 2 * t)
}

/// `(1/|S^{n−1}|) ∮_{|v|=R} |h|^{−n} det[h, ∂_{t_1} h, …, ∂_{t_{n−1}} h] dS`.
pub fn gauss_map_degree(h: &dyn Field, radius: f64, level: usize) -> Result<GaussMapResult> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty field".into()));
    }
    if n == 1 {
        let hp = h.eval_component(0, &[radius]);
        let hm = h.eval_component(0, &[-radius]);
        if hp == 0.0 || hm == 0.0 {
            return Err(Error::Singular { location: vec![if hp == 0.0 { radius } else { -radius }] });
        }
        let v = 0.5 * (hp.signum() - hm.signum());
        return Ok(GaussMapResult { value: v, rounded: Some(v as i64), residual: 0.0, nodes: 2 });
    }
    let (nt, np) = sizes(n, level);
    let q = sphere_quadrature(n, nt, np)?;
    let terms: Vec<Result<f64>> = (0..q.len())
        .into_par_iter()
        .map(|i| {
            let p: Vec<f64> = q.node(i).iter().map(|u| u * radius).collect();
            let mut out = vec![0.0; n];
            let mut jac = vec![0.0; n * n];
            h.eval_jac(&p, &mut out, &mut jac);
            let hn = out.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(hn > 0.0) || !hn.is_finite() {
                return Err(Error::Singular { location: p });
            }
            let mut mat = vec![0.0; n * n];
            mat[..n].copy_from_slice(&out);
            for a in 0..n - 1 {
                let t = q.tangent(i, a);
                for r in 0..n {
                    mat[(a + 1) * n + r] = (0..n).map(|c| jac[r * n + c] * t[c]).sum();
                }
            }
            Ok(q.weights[i] * radius.powi(n as i32 - 1) * real_det(&mat, n) / hn.powi(n as i32))
        })
        .collect();
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    let value = total / sphere_area(n);
    let residual = (value - value.round()).abs();
    Ok(GaussMapResult {
        value,
        rounded: (residual <= 0.2).then_some(value.round() as i64),
        residual,
        nodes: q.len(),
    })
}
