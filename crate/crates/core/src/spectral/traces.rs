//! Line-conductivity traces for `d = 1` on a periodic real-space grid.
//!
//! `x`-factors act diagonally, `ξ`-factors as Fourier multipliers, and mixed
//! terms are symmetrized. The switch `P` ramps up at the origin and back down
//! across the seam so that it is periodic; only the diagonal over the central
//! half of the cell is summed, which isolates the up-ramp.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::switch::SwitchFunction;
use super::SpectralModel;
use crate::error::{Error, Result};
use crate::linalg::eigh;
use crate::symbolic::expr::Point;
use crate::symbolic::SeparableMatrixSymbol;

/// Largest grid dimension (points × spinor) accepted.
pub const DIM_BUDGET: usize = 10_000;
/// Tolerance on the imaginary part of the windowed trace.
pub const IMAG_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct TraceResult {
    pub value: f64,
    pub imag: f64,
    pub grid: usize,
    pub length: f64,
    pub dim: usize,
}

/// Whether the trace routes compute the charge of `h`: a single axis, and the
/// Hamiltonian must not depend on the switch variable itself.
pub fn trace_support(h: &SeparableMatrixSymbol) -> std::result::Result<(), String> {
    if h.d != 1 {
        return Err(format!("full-grid traces need d = 1, got d = {}", h.d));
    }
    if !h.independent_of_x(0) {
        return Err("Hamiltonian depends on the switch variable x1".into());
    }
    Ok(())
}

pub(crate) struct Grid {
    pub x: Vec<f64>,
    pub h: Array2<C64>,
    pub p: Vec<f64>,
    pub window: Vec<bool>,
    pub spinor: usize,
}

/// Symmetric integer frequency index of `j` on an `n`-point grid.
fn frequency(j: usize, n: usize) -> f64 {
    if 2 * j < n {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

pub(crate) fn build_grid(model: &SpectralModel) -> Result<Grid> {
    crate::linalg::blas_self_check()?;
    let a = &model.hamiltonian;
    if a.d != 1 {
        return Err(Error::Capability(format!("full-grid traces need d = 1, got d = {}", a.d)));
    }
    let (n, len) = (model.grid_n, model.length);
    if n < 8 || !(len > 0.0) {
        return Err(Error::InvalidArgument("grid needs at least 8 points and a positive length".into()));
    }
    let s = a.n;
    let dim = n * s;
    if dim > DIM_BUDGET {
        return Err(Error::Budget(format!("grid dimension {dim} exceeds {DIM_BUDGET}")));
    }
    let dx = len / n as f64;
    let x: Vec<f64> = (0..n).map(|j| -0.5 * len + j as f64 * dx).collect();
    let k: Vec<f64> = (0..n).map(|j| 2.0 * PI * frequency(j, n) / len).collect();

    let mut h = Array2::<C64>::zeros((dim, dim));
    for t in &a.terms {
        let f: Vec<f64> = x.iter().map(|&xv| t.x.eval(Point { x: &[xv], xi: &[] })).collect();
        let g: Vec<f64> = k.iter().map(|&kv| t.xi.eval(Point { x: &[], xi: &[kv] })).collect();
        // circulant kernel of g(D): c[m] = (1/n) Σ_j g(k_j) e^{i k_j m dx}
        let c: Vec<C64> = (0..n)
            .map(|m| {
                (0..n)
                    .map(|j| g[j] * C64::from_polar(1.0, 2.0 * PI * frequency(j, n) * m as f64 / n as f64))
                    .sum::<C64>()
                    / n as f64
            })
            .collect();
        for r in 0..n {
            for col in 0..n {
                let v = 0.5 * (f[r] + f[col]) * c[(r + n - col) % n];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for p in 0..s {
                    for q in 0..s {
                        h[[r * s + p, col * s + q]] += v * t.coeff[[p, q]];
                    }
                }
            }
        }
    }

    let w = len / 8.0;
    let shift = model.p_shift as f64 * dx;
    let up = SwitchFunction::new(-0.5 * w + shift, 0.5 * w + shift, model.p_profile)?;
    // down-ramp centred on the seam, read on both sides of it
    let down = SwitchFunction::new(0.5 * len - 0.5 * w, 0.5 * len + 0.5 * w, model.p_profile)?;
    let p: Vec<f64> = x.iter().map(|&xv| up.value(xv) - down.value(xv) + 1.0 - down.value(xv + len)).collect();
    let window = x.iter().map(|&xv| xv.abs() < 0.25 * len).collect();
    Ok(Grid { x, h, p, window, spinor: s })
}

fn energy_switch(model: &SpectralModel) -> impl Fn(f64) -> (f64, f64) + '_ {
    move |e| {
        let (v, dv) = (model.phi.value(e), model.phi.derivative(e));
        if model.phi_flip {
            (1.0 - v, -dv)
        } else {
            (v, dv)
        }
    }
}

/// `2π Σ_{window} (i[H, P] φ′(H))_{xx}`.
pub fn sigma_trace(model: &SpectralModel) -> Result<TraceResult> {
    let g = build_grid(model)?;
    let (ev, v) = eigh(&g.h)?;
    let phi = energy_switch(model);
    let dim = ev.len();
    let s = g.spinor;
    // φ′(H) = V diag(φ′) V*
    let mut vd = v.clone();
    for (j, &e) in ev.iter().enumerate() {
        let w = phi(e).1;
        vd.column_mut(j).mapv_inplace(|z| z * w);
    }
    let m = vd.dot(&v.t().mapv(|z| z.conj()));
    let i = C64::new(0.0, 1.0);
    let mut total = C64::new(0.0, 0.0);
    for r in 0..dim {
        if !g.window[r / s] {
            continue;
        }
        let pr = g.p[r / s];
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..dim {
            let dp = g.p[c / s] - pr;
            if dp != 0.0 {
                acc += g.h[[r, c]] * dp * m[[c, r]];
            }
        }
        total += i * acc;
    }
    let total = total * 2.0 * PI;
    if total.im.abs() > IMAG_TOL {
        return Err(Error::Spectral(format!("trace has imaginary part {:.3e}", total.im)));
    }
    Ok(TraceResult { value: total.re, imag: total.im, grid: g.x.len(), length: model.length, dim })
}

/// `Σ_{window} ((U P U*)_{xx} − P(x))` with `U = exp(2πi φ(H))`.
pub fn toeplitz_trace(model: &SpectralModel) -> Result<TraceResult> {
    let g = build_grid(model)?;
    let (ev, v) = eigh(&g.h)?;
    let phi = energy_switch(model);
    let dim = ev.len();
    let s = g.spinor;
    let mut vu = v.clone();
    for (j, &e) in ev.iter().enumerate() {
        let u = C64::from_polar(1.0, 2.0 * PI * phi(e).0);
        vu.column_mut(j).mapv_inplace(|z| z * u);
    }
    let u = vu.dot(&v.t().mapv(|z| z.conj()));
    let mut total = 0.0;
    for r in 0..dim {
        if !g.window[r / s] {
            continue;
        }
        let upu: f64 = (0..dim).map(|c| u[[r, c]].norm_sqr() * g.p[c / s]).sum();
        total += upu - g.p[r / s];
    }
    Ok(TraceResult { value: total, imag: 0.0, grid: g.x.len(), length: model.length, dim })
}
