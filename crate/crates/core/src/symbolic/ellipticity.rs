//! Sampling probe for the growth of the smallest singular value of a symbol.

use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::matrix::SeparableMatrixSymbol;
use crate::error::{Error, Result};
use crate::linalg::adjoint;

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub r_min: f64,
    pub c_est: f64,
    pub pass: bool,
    /// Minimum of `σ_min / ⟨r⟩^m` on each shell.
    pub shell_ratios: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub samples_per_shell: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { samples_per_shell: 256, tolerance: 1e-3, seed: 7 }
    }
}

/// Smallest singular value of a small complex matrix.
pub fn smallest_singular_value(a: &Array2<C64>) -> Result<f64> {
    if a.nrows() == 1 {
        return Ok(a[[0, 0]].norm());
    }
    let g = adjoint(&a.view()).dot(a);
    let ev = g.eigvalsh(UPLO::Upper)?;
    Ok(ev.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0).sqrt())
}

/// Samples `(x_1..x_k, ξ_1..ξ_d)` on each shell (other `x` held at zero) and
/// compares the smallest singular value of `a` with `⟨r⟩^m`.
pub fn ellipticity_probe(
    a: &SeparableMatrixSymbol,
    k: usize,
    m: u32,
    shells: &[f64],
    opts: &ProbeOptions,
) -> Result<EllipticityReport> {
    if shells.is_empty() {
        return Err(Error::InvalidArgument("no shells given".into()));
    }
    if shells.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("shell radii must be increasing".into()));
    }
    let d = a.d;
    let dim = d + k;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ratios = Vec::with_capacity(shells.len());
    for &r in shells {
        let mut worst = f64::INFINITY;
        for _ in 0..opts.samples_per_shell {
            let mut v: Vec<f64> = (0..dim).map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
            let nv = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            v.iter_mut().for_each(|t| *t *= r / nv);
            let mut x = vec![0.0; d];
            x[..k].copy_from_slice(&v[d..]);
            let s = smallest_singular_value(&a.eval(&x, &v[..d]))?;
            if !s.is_finite() {
                return Err(Error::Evaluation(format!("non-finite symbol at radius {r}")));
            }
            worst = worst.min(s / (1.0 + r * r).sqrt().powi(m as i32));
        }
        ratios.push(worst);
    }
    let last_fail = ratios.iter().rposition(|&c| c < opts.tolerance);
    let (r_min, tail) = match last_fail {
        None => (0.0, &ratios[..]),
        Some(i) if i + 1 < shells.len() => (shells[i + 1], &ratios[i + 1..]),
        Some(_) => (f64::INFINITY, &ratios[ratios.len()..]),
    };
    let c_est = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = !tail.is_empty() && c_est >= opts.tolerance;
    Ok(EllipticityReport { r_min, c_est: if tail.is_empty() { 0.0 } else { c_est }, pass, shell_ratios: ratios })
}
