//! Hermite-function basis: position matrix, its Gauss–Hermite eigenbasis, and
//! the ladder-operator forms of `x` and `D = −i d/dx`.

use ndarray::Array2;
use crate::linalg::eigh;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Truncated `x` in the Hermite basis: `x_{n,n+1} = √((n+1)/2)`.
pub fn position_matrix(n: usize) -> Array2<f64> {
    let mut x = Array2::zeros((n, n));
    for k in 0..n.saturating_sub(1) {
        let v = ((k + 1) as f64 / 2.0).sqrt();
        x[[k, k + 1]] = v;
        x[[k + 1, k]] = v;
    }
    x
}

/// Truncated `(a + a†)/√2` and `(a − a†)/(i√2)`.
pub fn ladder_matrices(n: usize) -> (Array2<C64>, Array2<C64>) {
    let mut x = Array2::zeros((n, n));
    let mut d = Array2::zeros((n, n));
    for k in 0..n.saturating_sub(1) {
        let v = ((k + 1) as f64 / 2.0).sqrt();
        x[[k, k + 1]] = C64::new(v, 0.0);
        x[[k + 1, k]] = C64::new(v, 0.0);
        d[[k, k + 1]] = C64::new(0.0, -v);
        d[[k + 1, k]] = C64::new(0.0, v);
    }
    (x, d)
}

/// Eigen-decomposition `X_N = V diag(nodes) Vᵀ` of the truncated position
/// matrix; `nodes` are the Gauss–Hermite points.
#[derive(Debug, Clone)]
pub struct HermiteAxis {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub v: Array2<f64>,
}

impl HermiteAxis {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("basis size must be positive".into()));
        }
        // Simple eigenvalues: each eigenvector is real up to one phase.
        let (nodes, vc) = eigh(&position_matrix(n).mapv(|x| C64::new(x, 0.0)))?;
        let mut v = Array2::zeros((n, n));
        for j in 0..n {
            let col = vc.column(j);
            let big = col.iter().fold(C64::new(0.0, 0.0), |m, &z| if z.norm() > m.norm() { z } else { m });
            let rot = big.conj() / big.norm();
            for i in 0..n {
                v[[i, j]] = (col[i] * rot).re;
            }
        }
        Ok(HermiteAxis { n, nodes: nodes.to_vec(), v })
    }

    /// `f(X_N) = V f(nodes) Vᵀ`.
    pub fn function(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let mut vf = self.v.clone();
        for (j, &x) in self.nodes.iter().enumerate() {
            let s = f(x);
            vf.column_mut(j).mapv_inplace(|a| a * s);
        }
        vf.dot(&self.v.t())
    }

    /// `g(D_N)` with `D_N = Φ X_N Φ*`, `Φ = diag(iⁿ)`.
    pub fn momentum_function(&self, g: impl Fn(f64) -> f64) -> Array2<C64> {
        let r = self.function(g);
        Array2::from_shape_fn((self.n, self.n), |(a, b)| phase(a as i64 - b as i64) * r[[a, b]])
    }
}

/// `i^k`.
pub fn phase(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}
