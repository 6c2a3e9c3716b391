//! Domain-wall augmentation `h^k → h^{k+1} → … → h^d` and the Fredholm symbol
//! `a = a_{d−1} − i m_d`.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::clifford::{clifford_level, sigma1, sigma2, sigma3};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, identity, kron, I};
use crate::symbolic::{Expr, Point, SeparableMatrixSymbol, Term, Var, VectorSymbol};

/// Default wall `⟨x_j⟩^{m−1} x_j` in coordinate `x_j` (0-based `j`).
pub fn default_wall(j: usize, m: u32) -> Expr {
    if m == 1 {
        Expr::x(j)
    } else {
        Expr::Product(vec![Expr::Pow(Box::new(Expr::Bracket(vec![Expr::x(j)])), m as i32 - 1), Expr::x(j)])
    }
}

/// Spinor dimension `2^{⌊(d+j)/2⌋}` of stage `j`.
pub fn spinor_dim(d: usize, j: usize) -> usize {
    1 << ((d + j) / 2)
}

/// Appends the wall for coordinate `x_{j+1}` to a stage-`j` field.
/// `chiral_in` must be true exactly when `d + j` is even.
pub fn augment_once(h: &VectorSymbol, chiral_in: bool, wall: Option<&Expr>) -> Result<VectorSymbol> {
    let j = h.k;
    if j >= h.d {
        return Err(Error::InvalidArgument(format!("stage {j} is already fully confined (d = {})", h.d)));
    }
    let even = (h.d + j) % 2 == 0;
    if chiral_in != even {
        return Err(Error::ChiralMismatch(format!(
            "d + k = {} requires chiral = {even}, got {chiral_in}",
            h.d + j
        )));
    }
    let w = match wall {
        Some(w) => {
            check_wall(w, j, h.m)?;
            w.clone()
        }
        None => default_wall(j, h.m),
    };
    let mut comps = h.components.clone();
    comps.push(w);
    let mut out = VectorSymbol::new(h.d, j + 1, h.m, comps)?;
    out.eps = h.eps;
    Ok(out)
}

/// A custom wall must depend on `x_{j+1}` only and share the default's sign far out.
fn check_wall(w: &Expr, j: usize, m: u32) -> Result<()> {
    let mask = w.dependency_mask();
    if mask & !(1u16 << Var::X(j).slot()) != 0 {
        return Err(Error::InvalidArgument(format!("wall for x{} depends on other variables: {w}", j + 1)));
    }
    let reference = default_wall(j, m);
    for &t in &[-1e3, -1e2, 1e2, 1e3] {
        let mut x = [0.0; 4];
        x[j] = t;
        let p = Point { x: &x, xi: &[] };
        let (a, b) = (w.eval(p), reference.eval(p));
        if !(a.is_finite() && a.signum() == b.signum()) {
            return Err(Error::InvalidArgument(format!(
                "wall for x{} does not match the default asymptotics at x = {t}",
                j + 1
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AugmentedChain {
    pub base: VectorSymbol,
    /// `h^{k+1} … h^d`.
    pub stages: Vec<VectorSymbol>,
    /// `n_k … n_d`.
    pub spinor_dims: Vec<usize>,
    /// `a_{d−1}`, built from the first `2d − 1` components of `h^d`.
    pub hamiltonian: SeparableMatrixSymbol,
    /// `a = a_{d−1} − i m_d`.
    pub fredholm_symbol: SeparableMatrixSymbol,
}

impl AugmentedChain {
    pub fn d(&self) -> usize {
        self.base.d
    }

    /// `h^d`.
    pub fn top(&self) -> &VectorSymbol {
        self.stages.last().unwrap_or(&self.base)
    }

    /// Field at stage `j` (`k ≤ j ≤ d`).
    pub fn stage(&self, j: usize) -> &VectorSymbol {
        if j == self.base.k {
            &self.base
        } else {
            &self.stages[j - self.base.k - 1]
        }
    }

    /// Matrix realization `a_j = h^j · Γ_{⌊(d+j)/2⌋}`.
    pub fn stage_matrix(&self, j: usize) -> Result<SeparableMatrixSymbol> {
        let h = self.stage(j);
        let cs = clifford_level((h.d + j) / 2);
        crate::symbolic::to_matrix_symbol(h, &cs)
    }
}

/// Builds the full chain; `walls` optionally overrides `m_j` (1-based `j`).
pub fn build_chain(h: &VectorSymbol, walls: &BTreeMap<usize, Expr>) -> Result<AugmentedChain> {
    let d = h.d;
    let mut stages = Vec::new();
    let mut spinor_dims = vec![spinor_dim(d, h.k)];
    let mut cur = h.clone();
    while cur.k < d {
        let chiral = (d + cur.k) % 2 == 0;
        cur = augment_once(&cur, chiral, walls.get(&(cur.k + 1)))?;
        spinor_dims.push(spinor_dim(d, cur.k));
        stages.push(cur.clone());
    }
    let top = stages.last().unwrap_or(h);
    let gam = clifford_level(d - 1);
    let hamiltonian = SeparableMatrixSymbol::from_field(d, &top.components[..2 * d - 1], &gam.gammas, true)?;
    let mut fredholm_symbol = hamiltonian.clone();
    fredholm_symbol.hermitian = false;
    let minus_i = identity(gam.n) * (-I);
    for (x, xi) in crate::symbolic::separate(&top.components[2 * d - 1])? {
        fredholm_symbol.terms.push(Term { x, xi, coeff: minus_i.clone() });
    }
    Ok(AugmentedChain { base: h.clone(), stages, spinor_dims, hamiltonian, fredholm_symbol })
}

/// Matrix-level step: `a + m σ₃⊗I` when `odd` is false, `σ₁⊗a + m σ₂⊗I` otherwise.
pub fn augment_matrix(a: &SeparableMatrixSymbol, wall: &Expr, odd: bool) -> Result<SeparableMatrixSymbol> {
    let half = if odd { a.n } else { a.n / 2 };
    if !odd && a.n < 2 {
        return Err(Error::DimensionMismatch("even step needs n ≥ 2".into()));
    }
    let mut out = if odd {
        let s1 = sigma1();
        a.map_coeffs(|c| kron(&s1.view(), &c.view()), a.hermitian)
    } else {
        a.clone()
    };
    let s = if odd { sigma2() } else { sigma3() };
    let coeff = kron(&s.view(), &identity(half).view());
    for (x, xi) in crate::symbolic::separate(wall)? {
        out.terms.push(Term { x, xi, coeff: coeff.clone() });
    }
    out.n = coeff.nrows();
    Ok(out)
}

/// True when `‖γ⁰a + aγ⁰‖ ≤ 10⁻¹⁰‖a‖` at `samples` random points.
pub fn chiral_check(a: &SeparableMatrixSymbol, gamma0: &Array2<C64>, samples: usize) -> Result<bool> {
    if gamma0.dim() != (a.n, a.n) {
        return Err(Error::DimensionMismatch(format!("γ⁰ is {:?}, symbol is {}×{}", gamma0.dim(), a.n, a.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..samples {
        let x: Vec<f64> = (0..a.d).map(|_| 2.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let xi: Vec<f64> = (0..a.d).map(|_| 2.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let m = a.eval(&x, &xi);
        let ac = gamma0.dot(&m) + m.dot(gamma0);
        if frobenius(&ac.view()) > 1e-10 * frobenius(&m.view()) {
            return Ok(false);
        }
    }
    Ok(true)
}
