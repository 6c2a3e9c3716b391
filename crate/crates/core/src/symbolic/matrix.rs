//! Separable matrix symbols `a(X) = Σ f_t(x) g_t(ξ) C_t`.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::expr::{Expr, FactorClass, Point, MAX_DIM};
use super::vector::VectorSymbol;
use crate::clifford::CliffordSet;
use crate::error::{Error, Result};
use crate::linalg::{adjoint, frobenius};

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    /// Depends on `x` only (or constant).
    pub x: Expr,
    /// Depends on `ξ` only (or constant).
    pub xi: Expr,
    pub coeff: Array2<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableMatrixSymbol {
    pub d: usize,
    pub n: usize,
    pub terms: Vec<Term>,
    pub hermitian: bool,
}

/// Splits an expression into `(x-factor, ξ-factor)` pairs whose sum is the
/// expression. Sums and products are expanded; nothing is factored.
pub fn separate(e: &Expr) -> Result<Vec<(Expr, Expr)>> {
    match e.classify() {
        FactorClass::Const | FactorClass::XOnly => return Ok(vec![(e.clone(), Expr::Const(1.0))]),
        FactorClass::XiOnly => return Ok(vec![(Expr::Const(1.0), e.clone())]),
        FactorClass::Mixed => {}
    }
    match e {
        Expr::Sum(items) => {
            let mut out = Vec::new();
            for it in items {
                out.extend(separate(it)?);
            }
            Ok(out)
        }
        Expr::Product(items) => {
            let mut acc = vec![(Expr::Const(1.0), Expr::Const(1.0))];
            for it in items {
                let parts = separate(it)?;
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for (ax, ag) in &acc {
                    for (px, pg) in &parts {
                        next.push((ax.clone().times(px.clone()), ag.clone().times(pg.clone())));
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        other => Err(Error::NonSeparable(other.to_string())),
    }
}

impl SeparableMatrixSymbol {
    /// `Σ_j comps_j · mats_j`.
    pub fn from_field(d: usize, comps: &[Expr], mats: &[Array2<C64>], hermitian: bool) -> Result<Self> {
        if comps.len() != mats.len() || mats.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} components for {} matrices",
                comps.len(),
                mats.len()
            )));
        }
        let n = mats[0].nrows();
        let mut terms = Vec::new();
        for (c, m) in comps.iter().zip(mats) {
            for (x, xi) in separate(c)? {
                terms.push(Term { x, xi, coeff: m.clone() });
            }
        }
        Ok(SeparableMatrixSymbol { d, n, terms, hermitian })
    }

    /// Validates explicit terms.
    pub fn from_terms(d: usize, terms: Vec<Term>) -> Result<Self> {
        let n = terms.first().map(|t| t.coeff.nrows()).ok_or_else(|| Error::InvalidArgument("no terms".into()))?;
        for t in &terms {
            if t.coeff.dim() != (n, n) {
                return Err(Error::DimensionMismatch(format!("coefficient shape {:?}, expected ({n}, {n})", t.coeff.dim())));
            }
            if matches!(t.x.classify(), FactorClass::XiOnly | FactorClass::Mixed) {
                return Err(Error::NonSeparable(format!("x-factor depends on xi: {}", t.x)));
            }
            if matches!(t.xi.classify(), FactorClass::XOnly | FactorClass::Mixed) {
                return Err(Error::NonSeparable(format!("xi-factor depends on x: {}", t.xi)));
            }
            if t.x.max_dim_used() > d || t.xi.max_dim_used() > d {
                return Err(Error::DimensionMismatch(format!("term uses variables beyond d = {d}")));
            }
        }
        let hermitian = terms.iter().all(|t| frobenius(&(&t.coeff - &adjoint(&t.coeff.view())).view()) == 0.0);
        Ok(SeparableMatrixSymbol { d, n, terms, hermitian })
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Array2<C64> {
        let p = Point { x, xi };
        let mut a = Array2::zeros((self.n, self.n));
        for t in &self.terms {
            let s = t.x.eval(p) * t.xi.eval(p);
            if s != 0.0 {
                a.scaled_add(C64::new(s, 0.0), &t.coeff);
            }
        }
        a
    }

    /// Value and partial derivatives; `grads[i]` is `∂_{x_i} a` for `i < d` and
    /// `∂_{ξ_{i−d}} a` for `d ≤ i < 2d`.
    pub fn eval_grad(&self, x: &[f64], xi: &[f64]) -> (Array2<C64>, Vec<Array2<C64>>) {
        let p = Point { x, xi };
        let d = self.d;
        let mut a = Array2::zeros((self.n, self.n));
        let mut grads = vec![Array2::zeros((self.n, self.n)); 2 * d];
        for t in &self.terms {
            let fx = t.x.eval_dual(p);
            let gx = t.xi.eval_dual(p);
            let s = fx.v * gx.v;
            if s != 0.0 {
                a.scaled_add(C64::new(s, 0.0), &t.coeff);
            }
            for i in 0..d {
                let dx = fx.g[i] * gx.v + fx.v * gx.g[i];
                let dxi = fx.g[MAX_DIM + i] * gx.v + fx.v * gx.g[MAX_DIM + i];
                if dx != 0.0 {
                    grads[i].scaled_add(C64::new(dx, 0.0), &t.coeff);
                }
                if dxi != 0.0 {
                    grads[d + i].scaled_add(C64::new(dxi, 0.0), &t.coeff);
                }
            }
        }
        (a, grads)
    }

    /// Checks `a(X) = a(X)*` on the given sample points `(x, ξ)`.
    pub fn check_hermitian(&self, samples: &[(Vec<f64>, Vec<f64>)]) -> bool {
        samples.iter().all(|(x, xi)| {
            let a = self.eval(x, xi);
            let diff = frobenius(&(&a - &adjoint(&a.view())).view());
            diff <= 1e-12 * frobenius(&a.view()).max(1.0)
        })
    }

    /// Symbol with every term's coefficient replaced by `f(coeff)`.
    pub fn map_coeffs(&self, f: impl Fn(&Array2<C64>) -> Array2<C64>, hermitian: bool) -> Self {
        SeparableMatrixSymbol {
            d: self.d,
            n: self.n,
            terms: self.terms.iter().map(|t| Term { x: t.x.clone(), xi: t.xi.clone(), coeff: f(&t.coeff) }).collect(),
            hermitian,
        }
    }

    /// True when no term depends on `x_j` (0-based).
    pub fn independent_of_x(&self, j: usize) -> bool {
        self.terms.iter().all(|t| !t.x.depends_on(super::expr::Var::X(j)))
    }
}

/// `a = Σ_j h_j γ^j` for a field with `d + k` components.
pub fn to_matrix_symbol(vs: &VectorSymbol, cs: &CliffordSet) -> Result<SeparableMatrixSymbol> {
    let nc = vs.components.len();
    if cs.kappa != nc / 2 || nc > 2 * cs.kappa + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{nc} components need Clifford level {}, got {}",
            nc / 2,
            cs.kappa
        )));
    }
    SeparableMatrixSymbol::from_field(vs.d, &vs.components, &cs.gammas[..nc], true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{build_clifford, sigma1, sigma2};
    use crate::linalg::{identity, max_abs};
    use crate::symbolic::parse::{parse_factor, ParseContext};

    #[test]
    fn dirac_symbol_terms() {
        let vs = VectorSymbol::parse(2, 0, 1, &ParseContext::new(2), &["xi1", "xi2"]).unwrap();
        let a = to_matrix_symbol(&vs, &build_clifford(1).unwrap()).unwrap();
        let m = a.eval(&[0.0, 0.0], &[0.3, -0.7]);
        let expect = sigma1() * C64::new(0.3, 0.0) + sigma2() * C64::new(-0.7, 0.0);
        assert!(max_abs(&(m - expect).view()) < 1e-15);
    }

    #[test]
    fn squares_to_norm() {
        let vs = VectorSymbol::parse(2, 1, 1, &ParseContext::new(2), &["xi1", "xi2", "x1"]).unwrap();
        let a = to_matrix_symbol(&vs, &build_clifford(1).unwrap()).unwrap();
        let (x, xi) = ([0.4, 0.0], [1.1, -2.0]);
        let m = a.eval(&x, &xi);
        let n2 = 0.16 + 1.21 + 4.0;
        assert!(max_abs(&(m.dot(&m) - identity(2) * C64::new(n2, 0.0)).view()) < 1e-12);
    }

    #[test]
    fn separation_expands_products_and_rejects_mixed_atoms() {
        let ctx = ParseContext::new(2);
        let e = parse_factor("-(xi1^2 - 2*x1) * 3", &ctx).unwrap();
        let parts = separate(&e).unwrap();
        assert_eq!(parts.len(), 2);
        let p = Point { x: &[0.5], xi: &[2.0] };
        let total: f64 = parts.iter().map(|(a, b)| a.eval(p) * b.eval(p)).sum();
        assert!((total - e.eval(p)).abs() < 1e-14);
        let bad = parse_factor("snorm(x1, xi1; 1)", &ctx).unwrap();
        assert!(matches!(separate(&bad), Err(Error::NonSeparable(_))));
        let bad = parse_factor("(x1 + xi1)^2", &ctx).unwrap();
        assert!(separate(&bad).is_err());
    }

    #[test]
    fn gradients_match_fd() {
        let vs = VectorSymbol::parse(
            2,
            1,
            1,
            &ParseContext::new(2),
            &["xi1 * bracket(x1)", "xi2^2 - x1", "snorm_inv(xi; 0.5) * xi1 * xi2"],
        )
        .unwrap();
        let a = to_matrix_symbol(&vs, &build_clifford(1).unwrap()).unwrap();
        let x = [0.3, 0.0];
        let xi = [2.5, 1.7];
        let (_, g) = a.eval_grad(&x, &xi);
        let h = 1e-6;
        let fd = (a.eval(&x, &[xi[0] + h, xi[1]]) - a.eval(&x, &[xi[0] - h, xi[1]])) / C64::new(2.0 * h, 0.0);
        assert!(max_abs(&(&g[2] - &fd).view()) < 1e-6);
        let fd = (a.eval(&[x[0] + h, 0.0], &xi) - a.eval(&[x[0] - h, 0.0], &xi)) / C64::new(2.0 * h, 0.0);
        assert!(max_abs(&(&g[0] - &fd).view()) < 1e-6);
    }

    #[test]
    fn explicit_terms_validation() {
        let ctx = ParseContext::new(1);
        let t = Term { x: parse_factor("xi1", &ctx).unwrap(), xi: Expr::Const(1.0), coeff: identity(1) };
        assert!(SeparableMatrixSymbol::from_terms(1, vec![t]).is_err());
        let t = Term { x: Expr::Const(1.0), xi: parse_factor("xi1", &ctx).unwrap(), coeff: identity(1) };
        let s = SeparableMatrixSymbol::from_terms(1, vec![t]).unwrap();
        assert!(s.hermitian);
    }
}
