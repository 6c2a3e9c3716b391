//! Fiber Hamiltonians `H[ξ_d]`: the stage-(d−1) symbol quantized in the
//! confined directions `x_1..x_{d−1}` on a truncated Hermite basis, with the
//! last momentum kept as a parameter.
//!
//! Each separable term `f(x) g(ξ) C` becomes `½(f(X)g(D) + g(D)f(X)) ⊗ C`.
//! Both factors are evaluated by functional calculus on the Gauss–Hermite
//! eigenbasis of the truncated position matrix, which reproduces the ladder
//! forms exactly for linear factors. Modes are ordered with axis 0 slowest and
//! the spinor index fastest.

use ndarray::{Array2, ShapeBuilder};
use num_complex::Complex64 as C64;

use super::hermite::{phase, HermiteAxis};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, frobenius};
use crate::symbolic::expr::{Expr, Point, Var, MAX_DIM};
use crate::symbolic::SeparableMatrixSymbol;

/// Fraction of each axis (from the top) that carries the momentum shift and
/// counts as tail weight.
pub const TAIL_FRACTION: f64 = 0.2;

enum XFactor {
    Const(f64),
    Matrix(Array2<f64>),
}

struct DynTerm {
    f: XFactor,
    g: Expr,
    coeff: Array2<C64>,
    /// `g` also depends on a confined momentum.
    confined: bool,
}

pub struct FiberBuilder {
    pub d: usize,
    pub spinor: usize,
    pub basis: usize,
    pub modes: usize,
    pub dim: usize,
    axes: usize,
    nodes: Vec<f64>,
    w: Array2<f64>,
    phases: Vec<C64>,
    /// Per-mode tail ramp in `[0, 1]`.
    ramp: Vec<f64>,
    static_part: Array2<C64>,
    dynamic: Vec<DynTerm>,
    /// Momentum offset applied to the `ξ_d`-dependent part on tail modes.
    pub shift: f64,
}

fn mode_numbers(mut idx: usize, basis: usize, axes: usize) -> Vec<usize> {
    let mut out = vec![0; axes];
    for a in (0..axes).rev() {
        out[a] = idx % basis;
        idx /= basis;
    }
    out
}

/// Linear ramp over the top `TAIL_FRACTION` of an axis, 0 below.
fn tail_ramp(n: usize, basis: usize) -> f64 {
    let start = ((1.0 - TAIL_FRACTION) * basis as f64).ceil() as usize;
    if n < start || basis < 2 {
        return 0.0;
    }
    (n + 1 - start) as f64 / (basis - start) as f64
}

fn complex_product(f: &Array2<f64>, g: &Array2<C64>) -> (Array2<C64>, Array2<C64>) {
    let gr = g.mapv(|z| z.re);
    let gi = g.mapv(|z| z.im);
    let fg_r = f.dot(&gr);
    let fg_i = f.dot(&gi);
    let gf_r = gr.dot(f);
    let gf_i = gi.dot(f);
    let fg = Array2::from_shape_fn(f.dim(), |ij| C64::new(fg_r[ij], fg_i[ij]));
    let gf = Array2::from_shape_fn(f.dim(), |ij| C64::new(gf_r[ij], gf_i[ij]));
    (fg, gf)
}

/// `h += s · (m ⊗ c)`.
fn add_kron(h: &mut Array2<C64>, s: C64, m: &Array2<C64>, c: &Array2<C64>) {
    let k = c.nrows();
    for ((i, j), &v) in m.indexed_iter() {
        let sv = s * v;
        if sv == C64::new(0.0, 0.0) {
            continue;
        }
        for p in 0..k {
            for q in 0..k {
                let cv = c[[p, q]];
                if cv != C64::new(0.0, 0.0) {
                    h[[i * k + p, j * k + q]] += sv * cv;
                }
            }
        }
    }
}

/// `h += s · (I ⊗ c)`.
fn add_identity_kron(h: &mut Array2<C64>, s: C64, modes: usize, c: &Array2<C64>) {
    let k = c.nrows();
    for i in 0..modes {
        for p in 0..k {
            for q in 0..k {
                h[[i * k + p, i * k + q]] += s * c[[p, q]];
            }
        }
    }
}

impl FiberBuilder {
    /// `h` is the stage-(d−1) symbol; it must not depend on `x_d`.
    ///
    /// Truncating the confined directions to a square basis always produces a
    /// partner branch at the top modes that cancels the flow over the whole
    /// line. With `shift = M ≠ 0` the `ξ_d`-dependent part is evaluated at
    /// `ξ_d + M` on tail modes, blended by the tail ramp `S`:
    /// `H + S (H_dyn(ξ_d + M) − H_dyn(ξ_d)) S`. That moves the partner
    /// crossing by `−M`, out of a window narrower than `M`.
    pub fn new(h: &SeparableMatrixSymbol, basis: usize, shift: f64) -> Result<Self> {
        crate::linalg::blas_self_check()?;
        let d = h.d;
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidArgument(format!("unsupported dimension d = {d}")));
        }
        if !h.independent_of_x(d - 1) {
            return Err(Error::Capability(format!("Hamiltonian depends on x{d}; no fiber decomposition in ξ{d}")));
        }
        let axes = d - 1;
        let basis = if axes == 0 { 1 } else { basis };
        if basis < 2 && axes > 0 {
            return Err(Error::InvalidArgument("basis size must be at least 2".into()));
        }
        let modes = basis.pow(axes as u32);
        let spinor = h.n;
        let dim = modes * spinor;

        let (nodes, w) = if axes == 0 {
            (Vec::new(), Array2::from_elem((1, 1), 1.0))
        } else {
            let ax = HermiteAxis::new(basis)?;
            let mut w = ax.v.clone();
            for _ in 1..axes {
                let (r, c) = w.dim();
                let mut next = Array2::zeros((r * basis, c * basis));
                for ((i, j), &a) in w.indexed_iter() {
                    for ((p, q), &b) in ax.v.indexed_iter() {
                        next[[i * basis + p, j * basis + q]] = a * b;
                    }
                }
                w = next;
            }
            (ax.nodes, w)
        };
        let mut phases = Vec::with_capacity(modes);
        let mut ramp = Vec::with_capacity(modes);
        for idx in 0..modes {
            let ns = mode_numbers(idx, basis, axes);
            phases.push(phase(ns.iter().sum::<usize>() as i64));
            ramp.push(ns.iter().map(|&n| tail_ramp(n, basis)).fold(0.0, f64::max));
        }

        let mut fb = FiberBuilder {
            d,
            spinor,
            basis,
            modes,
            dim,
            axes,
            nodes,
            w,
            phases,
            ramp,
            static_part: Array2::zeros((dim, dim).f()),
            dynamic: Vec::new(),
            shift: if axes > 0 { shift } else { 0.0 },
        };

        let mut st = Array2::<C64>::zeros((dim, dim).f());
        for t in &h.terms {
            for j in 0..d {
                if t.x.depends_on(Var::Xi(j)) || t.xi.depends_on(Var::X(j)) {
                    return Err(Error::NonSeparable(format!("{} · {}", t.x, t.xi)));
                }
            }
            let f = fb.x_factor(&t.x);
            let confined = (0..axes).any(|j| t.xi.depends_on(Var::Xi(j)));
            if t.xi.depends_on(Var::Xi(d - 1)) {
                fb.dynamic.push(DynTerm { f, g: t.xi.clone(), coeff: t.coeff.clone(), confined });
                continue;
            }
            let g = fb.xi_matrix(&t.xi, 0.0, false);
            let m = fb.symmetrized(&f, &g, confined, C64::new(fb.const_value(&t.xi), 0.0));
            match m {
                Some(m) => add_kron(&mut st, C64::new(1.0, 0.0), &m, &t.coeff),
                None => add_identity_kron(&mut st, C64::new(fb.const_value(&t.xi) * fb.const_f(&f), 0.0), modes, &t.coeff),
            }
        }
        fb.static_part = st;

        let probe = fb.fiber(0.37)?;
        let asym = frobenius(&(&probe - &adjoint(&probe.view())).view());
        if asym > 1e-10 * frobenius(&probe.view()).max(1.0) {
            return Err(Error::Spectral(format!("fiber matrix is not Hermitian (defect {asym:.3e})")));
        }
        Ok(fb)
    }

    fn grid_point(&self, idx: usize) -> Vec<f64> {
        mode_numbers(idx, self.basis, self.axes).iter().map(|&n| self.nodes[n]).collect()
    }

    fn x_factor(&self, f: &Expr) -> XFactor {
        if self.axes == 0 || (0..self.axes).all(|j| !f.depends_on(Var::X(j))) {
            return XFactor::Const(f.eval(Point { x: &[], xi: &[] }));
        }
        let vals: Vec<f64> = (0..self.modes).map(|i| f.eval(Point { x: &self.grid_point(i), xi: &[] })).collect();
        let mut wf = self.w.clone();
        for (j, &v) in vals.iter().enumerate() {
            wf.column_mut(j).mapv_inplace(|a| a * v);
        }
        XFactor::Matrix(wf.dot(&self.w.t()))
    }

    fn const_f(&self, f: &XFactor) -> f64 {
        match f {
            XFactor::Const(c) => *c,
            XFactor::Matrix(_) => 1.0,
        }
    }

    fn const_value(&self, g: &Expr) -> f64 {
        g.eval(Point { x: &[], xi: &[] })
    }

    /// `g(D_1, …, D_{d−1}, ξ_d)` (or its `ξ_d` derivative) in the Hermite basis.
    fn xi_matrix(&self, g: &Expr, xi_d: f64, derivative: bool) -> Array2<C64> {
        let d = self.d;
        let vals: Vec<f64> = (0..self.modes)
            .map(|i| {
                let mut xi = self.grid_point(i);
                xi.push(xi_d);
                let p = Point { x: &[], xi: &xi };
                if derivative {
                    g.eval_dual(p).g[MAX_DIM + d - 1]
                } else {
                    g.eval(p)
                }
            })
            .collect();
        let mut wg = self.w.clone();
        for (j, &v) in vals.iter().enumerate() {
            wg.column_mut(j).mapv_inplace(|a| a * v);
        }
        let r = wg.dot(&self.w.t());
        Array2::from_shape_fn((self.modes, self.modes), |(a, b)| self.phases[a] * self.phases[b].conj() * r[[a, b]])
    }

    /// Mode-space matrix of `½(FG + GF)`, or `None` when it is a multiple of
    /// the identity.
    fn symmetrized(&self, f: &XFactor, g: &Array2<C64>, confined: bool, g_const: C64) -> Option<Array2<C64>> {
        match (f, confined) {
            (XFactor::Const(_), false) => None,
            (XFactor::Const(c), true) => Some(g.mapv(|z| z * *c)),
            (XFactor::Matrix(m), false) => Some(m.mapv(|v| g_const * v)),
            (XFactor::Matrix(m), true) => {
                let (fg, gf) = complex_product(m, g);
                Some((fg + gf).mapv(|z| 0.5 * z))
            }
        }
    }

    fn add_dynamic(&self, h: &mut Array2<C64>, xi_d: f64, derivative: bool) {
        let d = self.d;
        for t in &self.dynamic {
            if t.confined {
                let g = self.xi_matrix(&t.g, xi_d, derivative);
                match self.symmetrized(&t.f, &g, true, C64::new(0.0, 0.0)) {
                    Some(m) => add_kron(h, C64::new(1.0, 0.0), &m, &t.coeff),
                    None => unreachable!(),
                }
            } else {
                let mut xi = vec![0.0; d];
                xi[d - 1] = xi_d;
                let p = Point { x: &[], xi: &xi };
                let s = if derivative { t.g.eval_dual(p).g[MAX_DIM + d - 1] } else { t.g.eval(p) };
                if s == 0.0 {
                    continue;
                }
                match &t.f {
                    XFactor::Const(c) => add_identity_kron(h, C64::new(s * c, 0.0), self.modes, &t.coeff),
                    XFactor::Matrix(m) => add_kron(h, C64::new(s, 0.0), &m.mapv(|v| C64::new(v, 0.0)), &t.coeff),
                }
            }
        }
    }

    fn dynamic_part(&self, xi_d: f64, derivative: bool) -> Array2<C64> {
        let mut h = Array2::zeros((self.dim, self.dim).f());
        self.add_dynamic(&mut h, xi_d, derivative);
        if self.shift != 0.0 {
            let mut far = Array2::zeros((self.dim, self.dim).f());
            self.add_dynamic(&mut far, xi_d + self.shift, derivative);
            let s = self.spinor;
            for ((i, j), v) in h.indexed_iter_mut() {
                let r = self.ramp[i / s] * self.ramp[j / s];
                if r != 0.0 {
                    *v += r * (far[[i, j]] - *v);
                }
            }
        }
        h
    }

    /// `H[ξ_d]` in column-major layout.
    pub fn fiber(&self, xi_d: f64) -> Result<Array2<C64>> {
        if !xi_d.is_finite() {
            return Err(Error::InvalidArgument(format!("fiber momentum {xi_d}")));
        }
        Ok(&self.static_part + &self.dynamic_part(xi_d, false))
    }

    /// `∂H/∂ξ_d` at `ξ_d`.
    pub fn fiber_derivative(&self, xi_d: f64) -> Array2<C64> {
        self.dynamic_part(xi_d, true)
    }

    /// Squared weight of a vector on the tail modes.
    pub fn tail_weight(&self, v: &[C64]) -> f64 {
        let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let tail: f64 = v
            .iter()
            .enumerate()
            .filter(|(i, _)| self.ramp[i / self.spinor] > 0.0)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        tail / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::build_chain;
    use crate::symbolic::{ParseContext, VectorSymbol};
    use std::collections::BTreeMap;

    fn dirac2() -> SeparableMatrixSymbol {
        let h = VectorSymbol::parse(2, 0, 1, &ParseContext::new(2), &["xi1", "xi2"]).unwrap();
        build_chain(&h, &BTreeMap::new()).unwrap().hamiltonian
    }

    fn spectrum(h: &Array2<C64>) -> Vec<f64> {
        crate::linalg::eigh(h).unwrap().0
    }

    #[test]
    fn dirac_ladder_levels() {
        // H² = D² + x² + ξ² − σ-term, so |E| ∈ {√(2n + ξ²)} on the low modes
        let fb = FiberBuilder::new(&dirac2(), 64, 18.0).unwrap();
        let ev = spectrum(&fb.fiber(0.0).unwrap());
        let mut low: Vec<f64> = ev.iter().copied().filter(|e| e.abs() < 2.6).collect();
        low.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
        let oracle = [0.0, 2f64.sqrt(), 2f64.sqrt(), 2.0, 2.0, 6f64.sqrt(), 6f64.sqrt()];
        assert!(low.len() >= oracle.len(), "{low:?}");
        for (e, o) in low.iter().zip(oracle) {
            assert!((e.abs() - o).abs() < 1e-6, "{low:?}");
        }
        let ev = spectrum(&fb.fiber(3.0).unwrap());
        assert!(ev.iter().any(|e| (e - 3.0).abs() < 1e-4));
    }

    #[test]
    fn truncation_leaves_a_spurious_zero_mode_without_shift() {
        let fb = FiberBuilder::new(&dirac2(), 64, 0.0).unwrap();
        let ev = spectrum(&fb.fiber(0.0).unwrap());
        assert_eq!(ev.iter().filter(|e| e.abs() < 1e-8).count(), 2);
    }

    #[test]
    fn hermitian_and_derivative() {
        let fb = FiberBuilder::new(&dirac2(), 16, 5.0).unwrap();
        for &xi in &[-2.0, 0.0, 1.3] {
            let h = fb.fiber(xi).unwrap();
            assert!(frobenius(&(&h - &adjoint(&h.view())).view()) < 1e-12);
            let e = 1e-6;
            let fd = (fb.fiber(xi + e).unwrap() - fb.fiber(xi - e).unwrap()).mapv(|z| z / (2.0 * e));
            assert!(frobenius(&(&fd - &fb.fiber_derivative(xi)).view()) < 1e-6);
        }
    }

    #[test]
    fn rejects_wall_direction_dependence() {
        let h = VectorSymbol::parse(1, 1, 1, &ParseContext::new(1), &["xi1", "x1"]).unwrap();
        let a = crate::symbolic::to_matrix_symbol(&h, &crate::clifford::build_clifford(1).unwrap()).unwrap();
        assert!(matches!(FiberBuilder::new(&a, 8, 0.0), Err(Error::Capability(_))));
    }
}
