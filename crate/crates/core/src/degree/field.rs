//! Maps `R^n → R^n` with exact Jacobians, as consumed by the degree solvers.

use crate::symbolic::VectorSymbol;

pub trait Field: Sync {
    fn dim(&self) -> usize;

    /// Component `i` at `v`.
    fn eval_component(&self, i: usize, v: &[f64]) -> f64;

    /// Component `i` and its gradient row.
    fn eval_component_grad(&self, i: usize, v: &[f64], grad: &mut [f64]) -> f64;

    /// Structural dependence of component `i` on variable `j`.
    fn depends(&self, i: usize, j: usize) -> bool;

    fn eval(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.dim()) {
            *o = self.eval_component(i, v);
        }
    }

    /// Values and row-major Jacobian.
    fn eval_jac(&self, v: &[f64], out: &mut [f64], jac: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            out[i] = self.eval_component_grad(i, v, &mut jac[i * n..(i + 1) * n]);
        }
    }
}

impl Field for VectorSymbol {
    fn dim(&self) -> usize {
        self.n_vars()
    }

    fn eval_component(&self, i: usize, v: &[f64]) -> f64 {
        let mut x = [0.0; 4];
        x[..self.k].copy_from_slice(&v[self.d..self.d + self.k]);
        self.components[i].eval(crate::symbolic::Point { x: &x, xi: &v[..self.d] })
    }

    fn eval_component_grad(&self, i: usize, v: &[f64], grad: &mut [f64]) -> f64 {
        let mut x = [0.0; 4];
        x[..self.k].copy_from_slice(&v[self.d..self.d + self.k]);
        let dual = self.components[i].eval_dual(crate::symbolic::Point { x: &x, xi: &v[..self.d] });
        for (j, g) in grad.iter_mut().enumerate().take(self.n_vars()) {
            *g = dual.g[self.var(j).slot()];
        }
        dual.v
    }

    fn depends(&self, i: usize, j: usize) -> bool {
        VectorSymbol::depends(self, i, j)
    }
}

/// `(h_1(u), h_2(w))` on the concatenated variables `(u, w)`.
pub struct ConcatField<'a> {
    parts: Vec<&'a dyn Field>,
    offsets: Vec<usize>,
}

impl<'a> ConcatField<'a> {
    pub fn new(parts: Vec<&'a dyn Field>) -> Self {
        let mut offsets = vec![0];
        for p in &parts {
            offsets.push(offsets.last().unwrap() + p.dim());
        }
        ConcatField { parts, offsets }
    }

    fn locate(&self, i: usize) -> (usize, usize) {
        let p = self.offsets.iter().rposition(|&o| o <= i).unwrap();
        (p, i - self.offsets[p])
    }
}

impl Field for ConcatField<'_> {
    fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn eval_component(&self, i: usize, v: &[f64]) -> f64 {
        let (p, li) = self.locate(i);
        let (a, b) = (self.offsets[p], self.offsets[p + 1]);
        self.parts[p].eval_component(li, &v[a..b])
    }

    fn eval_component_grad(&self, i: usize, v: &[f64], grad: &mut [f64]) -> f64 {
        let (p, li) = self.locate(i);
        let (a, b) = (self.offsets[p], self.offsets[p + 1]);
        grad.iter_mut().for_each(|g| *g = 0.0);
        self.parts[p].eval_component_grad(li, &v[a..b], &mut grad[a..b])
    }

    fn depends(&self, i: usize, j: usize) -> bool {
        let (p, li) = self.locate(i);
        let (a, b) = (self.offsets[p], self.offsets[p + 1]);
        (a..b).contains(&j) && self.parts[p].depends(li, j - a)
    }
}

/// `A · h` for a constant row-major matrix `A`.
pub struct LinearMappedField<'a> {
    pub inner: &'a dyn Field,
    pub a: Vec<f64>,
}

impl Field for LinearMappedField<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval_component(&self, i: usize, v: &[f64]) -> f64 {
        let n = self.dim();
        (0..n)
            .filter(|&j| self.a[i * n + j] != 0.0)
            .map(|j| self.a[i * n + j] * self.inner.eval_component(j, v))
            .sum()
    }

    fn eval_component_grad(&self, i: usize, v: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.dim();
        let mut tmp = vec![0.0; n];
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut val = 0.0;
        for j in 0..n {
            let c = self.a[i * n + j];
            if c == 0.0 {
                continue;
            }
            val += c * self.inner.eval_component_grad(j, v, &mut tmp);
            for (g, t) in grad.iter_mut().zip(&tmp) {
                *g += c * t;
            }
        }
        val
    }

    fn depends(&self, i: usize, j: usize) -> bool {
        let n = self.dim();
        (0..n).any(|l| self.a[i * n + l] != 0.0 && self.inner.depends(l, j))
    }
}

/// Same map with variables listed in a different order: new variable `j` is
/// old variable `perm[j]`.
pub struct PermutedField<'a> {
    pub inner: &'a dyn Field,
    pub perm: Vec<usize>,
}

impl PermutedField<'_> {
    fn to_inner(&self, v: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; v.len()];
        for (j, &p) in self.perm.iter().enumerate() {
            w[p] = v[j];
        }
        w
    }
}

impl Field for PermutedField<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval_component(&self, i: usize, v: &[f64]) -> f64 {
        self.inner.eval_component(i, &self.to_inner(v))
    }

    fn eval_component_grad(&self, i: usize, v: &[f64], grad: &mut [f64]) -> f64 {
        let mut g = vec![0.0; v.len()];
        let val = self.inner.eval_component_grad(i, &self.to_inner(v), &mut g);
        for (j, &p) in self.perm.iter().enumerate() {
            grad[j] = g[p];
        }
        val
    }

    fn depends(&self, i: usize, j: usize) -> bool {
        self.inner.depends(i, self.perm[j])
    }
}

/// Closure-backed field, mainly for tests and ad-hoc maps.
pub struct FnField<F: Fn(&[f64], &mut [f64], &mut [f64]) + Sync> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64], &mut [f64]) + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_component(&self, i: usize, v: &[f64]) -> f64 {
        let mut out = vec![0.0; self.n];
        let mut jac = vec![0.0; self.n * self.n];
        (self.f)(v, &mut out, &mut jac);
        out[i]
    }

    fn eval_component_grad(&self, i: usize, v: &[f64], grad: &mut [f64]) -> f64 {
        let mut out = vec![0.0; self.n];
        let mut jac = vec![0.0; self.n * self.n];
        (self.f)(v, &mut out, &mut jac);
        grad.copy_from_slice(&jac[i * self.n..(i + 1) * self.n]);
        out[i]
    }

    fn depends(&self, _i: usize, _j: usize) -> bool {
        true
    }

    fn eval_jac(&self, v: &[f64], out: &mut [f64], jac: &mut [f64]) {
        (self.f)(v, out, jac)
    }
}
