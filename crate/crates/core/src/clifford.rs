//! Recursive family of complex Clifford matrices built from Pauli matrices.

use ndarray::{array, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{identity, kron};

/// Largest level accepted by [`build_clifford`] (matrix dimension 64).
pub const MAX_KAPPA: usize = 6;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn sigma1() -> Array2<C64> {
    array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn sigma2() -> Array2<C64> {
    array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]
}

pub fn sigma3() -> Array2<C64> {
    array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
}

/// The matrices `γ_κ^1 … γ_κ^{2κ+1}` of dimension `2^κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordSet {
    pub kappa: usize,
    pub n: usize,
    pub gammas: Vec<Array2<C64>>,
    pub chiral: Array2<C64>,
}

impl CliffordSet {
    /// `γ^j` with 1-based label `j`.
    pub fn gamma(&self, j: usize) -> &Array2<C64> {
        &self.gammas[j - 1]
    }

    /// `Σ v_j γ^j`.
    pub fn contract(&self, v: &[f64]) -> Array2<C64> {
        let mut out = Array2::zeros((self.n, self.n));
        for (g, &x) in self.gammas.iter().zip(v) {
            out.scaled_add(C64::new(x, 0.0), g);
        }
        out
    }
}

/// Builds the level-`kappa` set, including the scalar level 0 (`n = 1`, single
/// matrix `[1]`) used for one-dimensional Fredholm symbols.
pub(crate) fn clifford_level(kappa: usize) -> CliffordSet {
    let mut gammas = vec![identity(1)];
    for level in 0..kappa {
        let inner = 2usize.pow(level as u32);
        let s1 = sigma1();
        let mut next: Vec<Array2<C64>> = gammas.iter().map(|g| kron(&s1.view(), &g.view())).collect();
        next.push(kron(&sigma2().view(), &identity(inner).view()));
        next.push(kron(&sigma3().view(), &identity(inner).view()));
        gammas = next;
    }
    let chiral = gammas.last().unwrap().clone();
    CliffordSet {
        kappa,
        n: 2usize.pow(kappa as u32),
        gammas,
        chiral,
    }
}

pub fn build_clifford(kappa: usize) -> Result<CliffordSet> {
    if kappa < 1 || kappa > MAX_KAPPA {
        return Err(Error::InvalidArgument(format!(
            "Clifford level must be in 1..={MAX_KAPPA}, got {kappa}"
        )));
    }
    Ok(clifford_level(kappa))
}

/// `tr(γ⁰ γ^{i_1} … γ^{i_{2d}})` for a level-`d` set; labels are 1-based.
pub fn structure_trace(set: &CliffordSet, d: usize, indices: &[usize]) -> Result<C64> {
    if set.kappa != d {
        return Err(Error::DimensionMismatch(format!(
            "set has level {}, expected {d}",
            set.kappa
        )));
    }
    if indices.len() != 2 * d {
        return Err(Error::InvalidArgument(format!(
            "expected {} labels, got {}",
            2 * d,
            indices.len()
        )));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > 2 * d + 1) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range 1..={}",
            2 * d + 1
        )));
    }
    let mut prod = set.chiral.clone();
    for &i in indices {
        prod = prod.dot(set.gamma(i));
    }
    Ok(prod.diag().sum())
}
