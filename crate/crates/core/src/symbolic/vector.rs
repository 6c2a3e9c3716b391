//! Vector-field symbols `h^k(x'_k, ξ) : R^{d+k} → R^{d+k}`.

use super::expr::{Expr, Point, Var, MAX_DIM};
use super::parse::{parse_factor, ParseContext};
use crate::error::{Error, Result};

/// A field with `d + k` components in the variables `(ξ_1..ξ_d, x_1..x_k)`;
/// the remaining coordinates `x_{k+1}..x_d` are held at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSymbol {
    pub d: usize,
    pub k: usize,
    pub m: u32,
    pub eps: Option<f64>,
    pub components: Vec<Expr>,
}

impl VectorSymbol {
    pub fn new(d: usize, k: usize, m: u32, components: Vec<Expr>) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidArgument(format!("dimension d must be in 1..={MAX_DIM}, got {d}")));
        }
        if k > d {
            return Err(Error::InvalidArgument(format!("k = {k} exceeds d = {d}")));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("order m must be positive".into()));
        }
        if components.len() != d + k {
            return Err(Error::DimensionMismatch(format!(
                "expected {} components, got {}",
                d + k,
                components.len()
            )));
        }
        for (i, c) in components.iter().enumerate() {
            for j in k..d {
                if c.depends_on(Var::X(j)) {
                    return Err(Error::InvalidArgument(format!(
                        "component {} depends on x{} but only x1..x{k} are confined",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(VectorSymbol { d, k, m, eps: None, components })
    }

    /// Parses each component with the given context (its `dim` is set to `d`).
    pub fn parse(d: usize, k: usize, m: u32, ctx: &ParseContext, sources: &[&str]) -> Result<Self> {
        let mut ctx = ctx.clone();
        ctx.dim = d;
        let comps = sources.iter().map(|s| parse_factor(s, &ctx)).collect::<Result<Vec<_>>>()?;
        let mut vs = Self::new(d, k, m, comps)?;
        vs.eps = ctx.params.get("eps").copied();
        Ok(vs)
    }

    pub fn n_vars(&self) -> usize {
        self.d + self.k
    }

    /// The phase-space variable behind degree-variable index `j`.
    pub fn var(&self, j: usize) -> Var {
        if j < self.d {
            Var::Xi(j)
        } else {
            Var::X(j - self.d)
        }
    }

    fn split<'a>(&self, v: &'a [f64], x: &'a mut [f64; MAX_DIM]) -> Point<'a> {
        x[..self.k].copy_from_slice(&v[self.d..self.d + self.k]);
        Point { x: &x[..], xi: &v[..self.d] }
    }

    /// Evaluates at `v = (ξ_1..ξ_d, x_1..x_k)`.
    pub fn eval(&self, v: &[f64], out: &mut [f64]) {
        let mut x = [0.0; MAX_DIM];
        let p = self.split(v, &mut x);
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(p);
        }
    }

    /// Evaluates values and the row-major Jacobian (rows = components,
    /// columns = `(ξ_1..ξ_d, x_1..x_k)`).
    pub fn eval_jac(&self, v: &[f64], out: &mut [f64], jac: &mut [f64]) {
        let n = self.n_vars();
        let mut x = [0.0; MAX_DIM];
        let p = self.split(v, &mut x);
        for (i, c) in self.components.iter().enumerate() {
            let dual = c.eval_dual(p);
            out[i] = dual.v;
            for j in 0..n {
                jac[i * n + j] = dual.g[self.var(j).slot()];
            }
        }
    }

    /// Component `i` depends on degree variable `j`.
    pub fn depends(&self, i: usize, j: usize) -> bool {
        self.components[i].depends_on(self.var(j))
    }

    /// Squared Euclidean norm at a point.
    pub fn norm_sq(&self, v: &[f64]) -> f64 {
        let mut out = vec![0.0; self.n_vars()];
        self.eval(v, &mut out);
        out.iter().map(|a| a * a).sum()
    }

    /// Canonical component texts.
    pub fn component_strings(&self) -> Vec<String> {
        self.components.iter().map(|c| c.to_string()).collect()
    }
}
