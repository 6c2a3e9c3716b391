//! Spectral flow of the fiber family `ξ_d ↦ H[ξ_d]` through a reference
//! energy, from counting functions with a Hellmann–Feynman cross-check at
//! every located crossing.

use ndarray::{Array2, Axis, OwnedRepr, ShapeBuilder};
use ndarray_linalg::{BKFactorized, FactorizeHInto, SolveH};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use super::fiber::FiberBuilder;
use super::switch::SwitchFunction;
use super::SpectralModel;
use crate::error::{Error, Result};
use crate::linalg::{adjoint, eigh};
use crate::symbolic::expr::{Point, Var};
use crate::symbolic::SeparableMatrixSymbol;

/// Half-width of the energy window probed around `E_ref` at the endpoints.
pub const GAP_FLOOR: f64 = 1e-3;
/// Tail weight above which the basis is reported as too small.
pub const TAIL_WARNING: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    pub xi: f64,
    /// Change `N(left) − N(right)` across the isolating bracket.
    pub count_change: i64,
    /// Hellmann–Feynman slopes `dE/dξ_d` of the crossing branches.
    pub slopes: Vec<f64>,
    pub tail_weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowResult {
    pub value: i64,
    pub counts: (usize, usize),
    pub plateau: i64,
    pub crossings: Vec<Crossing>,
    pub xi_max: f64,
    pub xi_points: usize,
    pub basis: usize,
    pub dim: usize,
    pub e_ref: f64,
    pub warnings: Vec<String>,
}

/// Number of eigenvalues of the Hermitian matrix `h` below `e`, from the
/// inertia of a Bunch–Kaufman factorization of `h − e`.
pub fn count_below(h: &Array2<C64>, e: f64) -> Result<usize> {
    let n = h.nrows();
    let bk = factor_shifted(h, e).map_err(|_| Error::Spectral(format!("energy {e} is an eigenvalue")))?;
    let (f, ipiv) = (&bk.a, &bk.ipiv);
    let mut neg = 0;
    let mut i = 0;
    while i < n {
        if ipiv[i] > 0 {
            let d = f[[i, i]].re;
            if d == 0.0 {
                return Err(Error::Spectral(format!("energy {e} is an eigenvalue")));
            }
            neg += (d < 0.0) as usize;
            i += 1;
        } else {
            let (d11, d22) = (f[[i, i]].re, f[[i + 1, i + 1]].re);
            let det = d11 * d22 - f[[i, i + 1]].norm_sqr();
            if det < 0.0 {
                neg += 1;
            } else if d11 < 0.0 {
                neg += 2;
            }
            i += 2;
        }
    }
    Ok(neg)
}

fn factor_shifted(h: &Array2<C64>, e: f64) -> Result<BKFactorized<OwnedRepr<C64>>> {
    let n = h.nrows();
    let mut a = Array2::<C64>::zeros((n, n).f());
    a.assign(h);
    for i in 0..n {
        a[[i, i]] -= e;
    }
    Ok(a.factorizeh_into()?)
}

/// Orthonormalizes the columns in place (modified Gram–Schmidt, two passes).
fn orthonormalize(q: &mut Array2<C64>) {
    for _ in 0..2 {
        for j in 0..q.ncols() {
            for i in 0..j {
                let (qi, mut qj) = {
                    let (l, r) = q.view_mut().split_at(Axis(1), j);
                    (l.column(i).to_owned(), r)
                };
                let mut col = qj.column_mut(0);
                let proj: C64 = qi.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
                col.zip_mut_with(&qi, |b, a| *b -= proj * a);
            }
            let norm = q.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            q.column_mut(j).mapv_inplace(|z| z / norm);
        }
    }
}

/// Eigenpairs of `h` within `window` of `e`, by block shift-and-invert
/// iteration on a Bunch–Kaufman factorization. The block size comes from the
/// inertia count, so no eigenpair in the window is missed.
fn near_eigenpairs(h: &Array2<C64>, e: f64, window: f64) -> Result<(Vec<f64>, Array2<C64>)> {
    let n = h.nrows();
    let k = count_below(h, e + window)? - count_below(h, e - window)?;
    if k == 0 {
        return Ok((Vec::new(), Array2::zeros((n, 0))));
    }
    let b = (k + 4).min(n);
    let sigma = e + 0.37 * window;
    let bk = factor_shifted(h, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1f1);
    let mut q = Array2::from_shape_fn((n, b), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    orthonormalize(&mut q);
    let hnorm = h.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
    for _ in 0..200 {
        for j in 0..b {
            let y = bk.solveh(&q.column(j).to_owned())?;
            q.column_mut(j).assign(&y);
        }
        orthonormalize(&mut q);
        let hq = h.dot(&q);
        let t = adjoint(&q.view()).dot(&hq);
        let (theta, s) = eigh(&t)?;
        q = q.dot(&s);
        let hq = hq.dot(&s);
        // Unconverged outer vectors can mix eigenvalues on both sides of the
        // window and show a spurious Ritz value inside it; only pairs with a
        // small residual count.
        let sel: Vec<usize> = (0..b)
            .filter(|&c| {
                (theta[c] - e).abs() <= window && {
                    let r = (&hq.column(c) - &q.column(c).mapv(|z| z * theta[c])).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    r <= 1e-10 * hnorm
                }
            })
            .collect();
        if sel.len() == k {
            let vals = sel.iter().map(|&c| theta[c]).collect();
            let vecs = Array2::from_shape_fn((n, k), |(r, c)| q[[r, sel[c]]]);
            return Ok((vals, vecs));
        }
    }
    Err(Error::Spectral(format!("inverse iteration near E = {e} did not converge")))
}

struct Counter<'a> {
    fb: &'a FiberBuilder,
    e: f64,
}

impl Counter<'_> {
    fn at(&self, xi: f64) -> Result<usize> {
        count_below(&self.fb.fiber(xi)?, self.e)
    }

    /// Brackets of width ≤ `tol` inside `[a, b]` across which the count changes.
    fn isolate(&self, a: (f64, usize), b: (f64, usize), tol: f64, out: &mut Vec<((f64, usize), (f64, usize))>) -> Result<()> {
        if a.1 == b.1 {
            return Ok(());
        }
        if b.0 - a.0 <= tol {
            out.push((a, b));
            return Ok(());
        }
        // off-center so that symmetric brackets never probe the crossing itself
        let m = a.0 + 0.5004 * (b.0 - a.0);
        let mc = (m, self.at(m)?);
        self.isolate(a, mc, tol, out)?;
        self.isolate(mc, b, tol, out)
    }
}

/// First-order model of the branches near `e` across a bracket `[a, b]`:
/// Rayleigh–Ritz of `H − e` and `∂H/∂ξ_d` on the eigenvectors of `H(mid)`
/// within `window` of `e`. Returns the slopes, the local count change
/// `N(a) − N(b)` of the pencil, and the largest tail weight.
fn local_crossing(fb: &FiberBuilder, a: f64, b: f64, e: f64, window: f64) -> Result<(Vec<f64>, i64, f64)> {
    let mid = 0.5 * (a + b);
    let h = fb.fiber(mid)?;
    let (vals, q) = near_eigenpairs(&h, e, window)?;
    if vals.is_empty() {
        return Ok((Vec::new(), 0, 0.0));
    }
    let dh = fb.fiber_derivative(mid);
    let b_loc = adjoint(&q.view()).dot(&dh).dot(&q);
    let (slopes, _) = eigh(&b_loc)?;
    let count = |t: f64| -> Result<i64> {
        let mut m = b_loc.mapv(|z| z * t);
        for (k, &v) in vals.iter().enumerate() {
            m[[k, k]] += v - e;
        }
        let (ev, _) = eigh(&m)?;
        Ok(ev.iter().filter(|&&v| v < 0.0).count() as i64)
    };
    let change = count(a - mid)? - count(b - mid)?;
    let tail = (0..vals.len()).map(|c| fb.tail_weight(&q.column(c).to_vec())).fold(0.0, f64::max);
    Ok((slopes.to_vec(), change, tail))
}

/// `Ok` when the fiber family is covered by the flow computation: no
/// dependence on `x_d`, and `ξ_d` entering only through terms `c·ξ_d`.
/// Other `ξ_d` dependence lets the truncation partner branch drift into the
/// window no matter how the tail modes are treated.
pub fn flow_support(h: &SeparableMatrixSymbol) -> std::result::Result<(), String> {
    let d = h.d;
    if d == 0 {
        return Err("empty symbol".into());
    }
    if !h.independent_of_x(d - 1) {
        return Err(format!("Hamiltonian depends on x{d}"));
    }
    for t in &h.terms {
        if !t.xi.depends_on(Var::Xi(d - 1)) {
            continue;
        }
        // affine in ξ_d with a slope that does not depend on the other momenta
        let at = |rest: f64, v: f64| {
            let mut xi = vec![rest; d];
            xi[d - 1] = v;
            t.xi.eval(Point { x: &[], xi: &xi })
        };
        let c = at(0.0, 1.0) - at(0.0, 0.0);
        let affine = [-1.3, 0.0, 0.37, 2.2].iter().all(|&r| {
                [-2.3, 0.6, 4.1].iter().all(|&v| {
                    let diff = at(r, v) - at(r, 0.0);
                    (diff - c * v).abs() <= 1e-12 * (c * v).abs().max(at(r, 0.0).abs())
                })
            });
        if !affine {
            return Err(format!("ξ{d} enters nonlinearly through `{}`", t.xi));
        }
    }
    Ok(())
}

pub fn spectral_flow(model: &SpectralModel) -> Result<FlowResult> {
    let h = &model.hamiltonian;
    let d = h.d;
    flow_support(h).map_err(Error::Capability)?;
    if model.xi_points < 2 || !(model.xi_max > 0.0) {
        return Err(Error::InvalidArgument("need xi_max > 0 and at least 2 fiber points".into()));
    }
    let fb = FiberBuilder::new(h, model.basis, model.tail_shift())?;
    let (xm, e) = (model.xi_max, model.e_ref);
    let counter = Counter { fb: &fb, e };
    let mut warnings = Vec::new();

    for &xi in &[-xm, xm] {
        let hf = fb.fiber(xi)?;
        let lo = count_below(&hf, e - GAP_FLOOR)?;
        let hi = count_below(&hf, e + GAP_FLOOR)?;
        if lo != hi {
            return Err(Error::Spectral(format!(
                "fiber at ξ{d} = {xi} has spectrum within {GAP_FLOOR} of E = {e}; endpoints must be gapped"
            )));
        }
    }

    let n = model.xi_points;
    let grid: Vec<f64> = (0..n).map(|i| -xm + 2.0 * xm * i as f64 / (n - 1) as f64).collect();
    let counts: Vec<usize> = grid.par_iter().map(|&x| counter.at(x)).collect::<Result<_>>()?;
    let flow = counts[0] as i64 - counts[n - 1] as i64;

    let tol = 1e-9 * xm;
    let mut brackets = Vec::new();
    for i in 0..n - 1 {
        counter.isolate((grid[i], counts[i]), (grid[i + 1], counts[i + 1]), tol, &mut brackets)?;
    }
    let window = 1e-6 * model.scale.max(1.0);
    let mut crossings = Vec::new();
    let mut signed = 0;
    for ((a, ca), (b, cb)) in brackets {
        let change = ca as i64 - cb as i64;
        let xi = 0.5 * (a + b);
        let (slopes, local, tail) = local_crossing(&fb, a, b, e, window)?;
        if local != change {
            return Err(Error::Spectral(format!(
                "crossing at ξ{d} ≈ {xi:.9}: counting gives {change}, slopes give {local} ({slopes:?})"
            )));
        }
        if tail > TAIL_WARNING {
            warnings.push(format!("crossing at ξ{d} ≈ {xi:.4} has tail weight {tail:.2e}; increase the basis"));
        }
        signed += change;
        crossings.push(Crossing { xi, count_change: change, slopes, tail_weight: tail });
    }
    if signed != flow {
        return Err(Error::Spectral(format!("crossings sum to {signed}, endpoint counts give {flow}")));
    }

    let inner = 0.8 * xm;
    let plateau = counter.at(-inner)? as i64 - counter.at(inner)? as i64;
    if plateau != flow {
        return Err(Error::Spectral(format!(
            "flow {flow} over ±{xm} but {plateau} over ±{inner}; widen the window"
        )));
    }

    Ok(FlowResult {
        value: flow,
        counts: (counts[0], counts[n - 1]),
        plateau,
        crossings,
        xi_max: xm,
        xi_points: n,
        basis: fb.basis,
        dim: fb.dim,
        e_ref: e,
        warnings,
    })
}

/// `∫ Tr ∂H/∂ξ_d φ′(H[ξ_d]) dξ_d` over `[−Ξ, Ξ]` by the trapezoid rule on the
/// model's fiber grid, summing Hellmann–Feynman slopes of the eigenpairs in
/// the support of `φ′`. Unlike the count it depends on `φ`, and it tends to
/// the flow once the fibers at `±Ξ` have no spectrum under `φ′`.
pub fn flow_integral(model: &SpectralModel) -> Result<f64> {
    Ok(flow_integrals(model, &[model.phi])?[0])
}

/// [`flow_integral`] for several switches at once; the eigenpairs are shared.
pub fn flow_integrals(model: &SpectralModel, phis: &[SwitchFunction]) -> Result<Vec<f64>> {
    let h = &model.hamiltonian;
    flow_support(h).map_err(Error::Capability)?;
    if model.xi_points < 2 || !(model.xi_max > 0.0) {
        return Err(Error::InvalidArgument("need xi_max > 0 and at least 2 fiber points".into()));
    }
    if phis.is_empty() {
        return Ok(Vec::new());
    }
    let fb = FiberBuilder::new(h, model.basis, model.tail_shift())?;
    let sign = if model.phi_flip { -1.0 } else { 1.0 };
    let lo = phis.iter().map(|p| p.left).fold(f64::INFINITY, f64::min);
    let hi = phis.iter().map(|p| p.right).fold(f64::NEG_INFINITY, f64::max);
    let (c, w) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let xm = model.xi_max;
    for &xi in &[-xm, xm] {
        let hf = fb.fiber(xi)?;
        for p in phis {
            if count_below(&hf, p.left)? != count_below(&hf, p.right)? {
                return Err(Error::Spectral(format!("fiber at ξ{} = {xi} has spectrum under φ′", h.d)));
            }
        }
    }
    let n = model.xi_points;
    let step = 2.0 * xm / (n - 1) as f64;
    let values: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let xi = -xm + step * i as f64;
            let (vals, q) = near_eigenpairs(&fb.fiber(xi)?, c, w)?;
            if vals.is_empty() {
                return Ok(vec![0.0; phis.len()]);
            }
            let dq = fb.fiber_derivative(xi).dot(&q);
            let slopes: Vec<f64> = (0..vals.len())
                .map(|j| q.column(j).iter().zip(dq.column(j)).map(|(a, b)| a.conj() * b).sum::<C64>().re)
                .collect();
            Ok(phis.iter().map(|p| vals.iter().zip(&slopes).map(|(&e, s)| p.derivative(e) * s).sum()).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..phis.len())
        .map(|k| {
            let inner: f64 = values[1..n - 1].iter().map(|v| v[k]).sum();
            sign * step * (inner + 0.5 * (values[0][k] + values[n - 1][k]))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inertia_matches_eigenvalues() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5, 17, 40] {
            let a = Array2::from_shape_fn((n, n), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let h = &a + &adjoint(&a.view());
            let (ev, _) = eigh(&h).unwrap();
            for &e in &[-1.3, -0.2, 0.0, 0.7] {
                let want = ev.iter().filter(|&&v| v < e).count();
                assert_eq!(count_below(&h, e).unwrap(), want, "n={n} e={e}");
            }
        }
    }

    #[test]
    fn inverse_iteration_finds_the_window() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 60;
        let a = Array2::from_shape_fn((n, n), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = &a + &adjoint(&a.view());
        let (ev, _) = eigh(&h).unwrap();
        let e = 0.5 * (ev[30] + ev[31]);
        let w = 0.6 * (ev[31] - ev[30]).max(ev[32] - ev[31]);
        let want: Vec<f64> = ev.iter().copied().filter(|v| (v - e).abs() <= w).collect();
        let (mut got, q) = near_eigenpairs(&h, e, w).unwrap();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9);
        }
        let gram = adjoint(&q.view()).dot(&q);
        for i in 0..q.ncols() {
            for j in 0..q.ncols() {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - t).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn tied_outer_eigenvalues_do_not_leak_into_the_window() {
        // shift sits at 0.37; -1.7 and 2.44 are equally far and fill the last block slot
        let spectrum = [0.5, 0.6, -1.29, 2.03, -1.5, -1.7, 2.44, -4.0, 5.0, 6.0, -7.0, 8.0];
        let n = spectrum.len();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut u = Array2::from_shape_fn((n, n), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        orthonormalize(&mut u);
        let d = Array2::from_diag(&ndarray::Array1::from_iter(spectrum.iter().map(|&v| C64::new(v, 0.0))));
        let h = u.dot(&d).dot(&adjoint(&u.view()));
        let (mut got, _) = near_eigenpairs(&h, 0.0, 1.0).unwrap();
        got.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(got.len(), 2);
        assert!((got[0] - 0.5).abs() < 1e-9 && (got[1] - 0.6).abs() < 1e-9, "{got:?}");
    }

    fn dirac(d: f64) -> SpectralModel {
        let m = crate::catalog::build_model("dirac_d", &crate::catalog::Params::from([("d".to_string(), d)]), None).unwrap();
        SpectralModel::new(m.chain.hamiltonian.clone(), m.scale)
    }

    #[test]
    fn scalar_momentum_flows_once() {
        let r = spectral_flow(&dirac(1.0)).unwrap();
        assert_eq!((r.value, r.plateau, r.crossings.len()), (1, 1, 1));
        assert!((r.crossings[0].slopes[0] - 1.0).abs() < 1e-9);
        assert!((flow_integral(&dirac(1.0)).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn planar_dirac_flows_once_for_every_reference() {
        for e in [0.0, -0.3, 0.45] {
            let m = dirac(2.0).with_e_ref(e);
            assert_eq!(spectral_flow(&m).unwrap().value, 1, "E_ref = {e}");
            let v = flow_integral(&m).unwrap();
            assert!((v - 1.0).abs() < 1e-2, "E_ref = {e}: {v}");
        }
    }

    #[test]
    fn reflected_momentum_reverses_the_flow() {
        let m = crate::catalog::build_model("dirac_scaled", &crate::catalog::Params::from([("d".to_string(), 1.0), ("a11".to_string(), -2.0)]), None).unwrap();
        let sm = SpectralModel::new(m.chain.hamiltonian.clone(), m.scale);
        assert_eq!(spectral_flow(&sm).unwrap().value, -1);
    }

    #[test]
    fn endpoints_must_be_gapped() {
        let mut m = dirac(1.0);
        m.xi_max = 1e-4;
        assert!(matches!(spectral_flow(&m), Err(Error::Spectral(_))));
    }
}
