//! Brouwer degree of symbol fields by root counting, with a Gauss-map
//! surface-integral oracle.

pub mod field;
pub mod gauss;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

pub use field::{ConcatField, Field, FnField, LinearMappedField, PermutedField};
pub use gauss::{gauss_map_degree, GaussMapResult};

use crate::error::{Error, Result};
use crate::linalg::{permutation_sign, real_det, real_solve};

const MAX_GROWTH: usize = 8;
const MAX_NEWTON: usize = 50;
const CANDIDATE_CAP: usize = 4000;
const ROOT_LIST_CAP: usize = 4096;
/// Smallest admissible `|h − y0|` on the boundary sphere.
const BOUNDARY_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Root {
    pub location: Vec<f64>,
    pub jacobian_det: f64,
    pub sign: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeResult {
    pub value: i64,
    pub roots: Vec<Root>,
    pub y0_used: Vec<f64>,
    #[serde(rename = "R")]
    pub radius: f64,
    pub trials: usize,
    pub method: String,
    /// Number of independent variable blocks the field split into.
    pub blocks: usize,
}

#[derive(Debug, Clone)]
pub struct DegreeOptions {
    /// Typical parameter magnitude; sets the initial ball radius and the
    /// perturbation size for `y0`.
    pub scale: f64,
    /// Fixed radius (disables auto-growth).
    pub radius: Option<f64>,
    pub seeds_per_axis: Option<usize>,
    pub seed: u64,
    pub max_trials: usize,
    pub agreeing: usize,
    /// Base regular value; zero when absent.
    pub y0: Option<Vec<f64>>,
    /// Split into independent variable blocks when possible.
    pub decompose: bool,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        DegreeOptions {
            scale: 1.0,
            radius: None,
            seeds_per_axis: None,
            seed: 0x5eed,
            max_trials: 20,
            agreeing: 3,
            y0: None,
            decompose: true,
        }
    }
}

/// Default seeds per axis for a block of `n` variables.
pub fn default_seeds(n: usize) -> usize {
    match n {
        0..=3 => 60,
        4 => 25,
        5 => 12,
        _ => 8,
    }
}

/// Restriction of a field to a subset of components and variables, other
/// variables held at zero.
struct Block<'a> {
    field: &'a dyn Field,
    comps: Vec<usize>,
    vars: Vec<usize>,
}

impl Block<'_> {
    fn n(&self) -> usize {
        self.vars.len()
    }

    fn full(&self, v: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.field.dim()];
        for (k, &j) in self.vars.iter().enumerate() {
            w[j] = v[k];
        }
        w
    }

    fn eval(&self, v: &[f64], y0: &[f64], out: &mut [f64]) {
        let w = self.full(v);
        for (k, &i) in self.comps.iter().enumerate() {
            out[k] = self.field.eval_component(i, &w) - y0[k];
        }
    }

    fn eval_jac(&self, v: &[f64], y0: &[f64], out: &mut [f64], jac: &mut [f64]) {
        let w = self.full(v);
        let n = self.n();
        let mut g = vec![0.0; w.len()];
        for (k, &i) in self.comps.iter().enumerate() {
            out[k] = self.field.eval_component_grad(i, &w, &mut g) - y0[k];
            for (c, &j) in self.vars.iter().enumerate() {
                jac[k * n + c] = g[j];
            }
        }
    }

    fn resid(&self, v: &[f64], y0: &[f64]) -> f64 {
        let mut out = vec![0.0; self.n()];
        self.eval(v, y0, &mut out);
        norm(&out)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Connected components of the component/variable dependency graph.
fn decompose(field: &dyn Field) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = field.dim();
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    for i in 0..n {
        for j in 0..n {
            if field.depends(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for node in 0..2 * n {
        let r = find(&mut parent, node);
        let pos = match groups.iter().position(|g| g.0 == r) {
            Some(p) => p,
            None => {
                groups.push((r, vec![], vec![]));
                groups.len() - 1
            }
        };
        if node < n {
            groups[pos].1.push(node);
        } else {
            groups[pos].2.push(node - n);
        }
    }
    groups.into_iter().map(|(_, c, v)| (c, v)).collect()
}

struct Scales {
    h: f64,
    /// Median norm of each Jacobian row.
    rows: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| Distribution::<f64>::sample(&StandardNormal, rng)).collect();
        let s = norm(&v);
        if s > 1e-8 {
            return v.into_iter().map(|a| a / s).collect();
        }
    }
}

fn block_scales(b: &Block, y0: &[f64], radius: f64) -> Scales {
    let n = b.n();
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let mut hs = Vec::with_capacity(256);
    let mut rows = vec![Vec::with_capacity(256); n];
    let mut out = vec![0.0; n];
    let mut jac = vec![0.0; n * n];
    for _ in 0..256 {
        let dir = random_unit(&mut rng, n);
        let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
        let p: Vec<f64> = dir.iter().map(|a| a * r).collect();
        b.eval_jac(&p, y0, &mut out, &mut jac);
        hs.push(norm(&out));
        for (acc, row) in rows.iter_mut().zip(jac.chunks(n)) {
            acc.push(norm(row));
        }
    }
    Scales { h: median(hs).max(f64::MIN_POSITIVE), rows: rows.into_iter().map(median).collect() }
}

fn boundary_min(b: &Block, y0: &[f64], radius: f64) -> f64 {
    let n = b.n();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let samples = if n == 1 { 2 } else { 2048 };
    let mut out = vec![0.0; n];
    let mut best = f64::INFINITY;
    for s in 0..samples {
        let dir = if n == 1 { vec![if s == 0 { 1.0 } else { -1.0 }] } else { random_unit(&mut rng, n) };
        let p: Vec<f64> = dir.iter().map(|a| a * radius).collect();
        b.eval(&p, y0, &mut out);
        best = best.min(norm(&out));
    }
    best
}

/// Damped Newton iteration; returns the converged point.
fn newton(b: &Block, y0: &[f64], start: &[f64], radius: f64, hs: f64) -> Option<Vec<f64>> {
    let n = b.n();
    let mut p = start.to_vec();
    let mut out = vec![0.0; n];
    let mut jac = vec![0.0; n * n];
    let mut trial = vec![0.0; n];
    let mut tout = vec![0.0; n];
    for _ in 0..MAX_NEWTON {
        b.eval_jac(&p, y0, &mut out, &mut jac);
        let rn = norm(&out);
        if !rn.is_finite() {
            return None;
        }
        if rn <= 1e-14 * hs {
            break;
        }
        let mut step: Vec<f64> = out.iter().map(|a| -a).collect();
        if !real_solve(&jac, &mut step, n) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            for k in 0..n {
                trial[k] = p[k] + t * step[k];
            }
            b.eval(&trial, y0, &mut tout);
            let tn = norm(&tout);
            if tn.is_finite() && tn * tn <= (1.0 - 1e-4 * t) * rn * rn {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        let moved = t * norm(&step);
        p.copy_from_slice(&trial);
        if norm(&p) > 4.0 * radius {
            return None;
        }
        if moved <= 1e-15 * radius {
            break;
        }
    }
    if b.resid(&p, y0) <= 1e-8 * hs {
        Some(p)
    } else {
        None
    }
}

struct BlockRoots {
    roots: Vec<(Vec<f64>, f64)>,
    degenerate: bool,
    near_boundary: bool,
}

fn grid_point(idx: usize, n: usize, s: usize, radius: f64, p: &mut [f64]) {
    let mut r = idx;
    let h = 2.0 * radius / s as f64;
    for c in p.iter_mut().take(n) {
        *c = -radius + (r % s) as f64 * h + 0.5 * h;
        r /= s;
    }
}

fn solve_block(b: &Block, y0: &[f64], radius: f64, seeds: usize) -> BlockRoots {
    let n = b.n();
    let sc = block_scales(b, y0, radius);
    let total = seeds.pow(n as u32);
    let starts: Vec<Vec<f64>> = if total <= 4000 {
        (0..total)
            .filter_map(|i| {
                let mut p = vec![0.0; n];
                grid_point(i, n, seeds, radius, &mut p);
                (norm(&p) <= radius).then_some(p)
            })
            .collect()
    } else {
        let vals: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|i| {
                let mut p = vec![0.0; n];
                grid_point(i, n, seeds, radius, &mut p);
                if norm(&p) > radius {
                    f64::INFINITY
                } else {
                    b.resid(&p, y0)
                }
            })
            .collect();
        let mut cands: Vec<usize> = (0..total)
            .into_par_iter()
            .filter(|&i| {
                let v = vals[i];
                if !v.is_finite() {
                    return false;
                }
                let mut stride = 1;
                let mut r = i;
                for _ in 0..n {
                    let c = r % seeds;
                    if c > 0 && vals[i - stride] < v {
                        return false;
                    }
                    if c + 1 < seeds && vals[i + stride] < v {
                        return false;
                    }
                    r /= seeds;
                    stride *= seeds;
                }
                true
            })
            .collect();
        let mut order: Vec<usize> = (0..total).filter(|&i| vals[i].is_finite()).collect();
        order.sort_by(|&a, &c| vals[a].total_cmp(&vals[c]).then(a.cmp(&c)));
        cands.extend(order.iter().take(64));
        cands.sort_by(|&a, &c| vals[a].total_cmp(&vals[c]).then(a.cmp(&c)));
        cands.dedup();
        cands.truncate(CANDIDATE_CAP);
        cands
            .into_iter()
            .map(|i| {
                let mut p = vec![0.0; n];
                grid_point(i, n, seeds, radius, &mut p);
                p
            })
            .collect()
    };
    let found: Vec<Option<Vec<f64>>> = starts.par_iter().map(|s| newton(b, y0, s, radius, sc.h)).collect();
    let mut roots: Vec<Vec<f64>> = Vec::new();
    for p in found.into_iter().flatten() {
        if !roots.iter().any(|q| norm(&q.iter().zip(&p).map(|(a, c)| a - c).collect::<Vec<_>>()) <= 1e-6 * radius) {
            roots.push(p);
        }
    }
    roots.sort_by(|a, c| {
        for (x, y) in a.iter().zip(c) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    });
    let mut out = vec![0.0; n];
    let mut jac = vec![0.0; n * n];
    let mut degenerate = false;
    let mut near_boundary = false;
    let mut list = Vec::new();
    for p in roots {
        b.eval_jac(&p, y0, &mut out, &mut jac);
        let det = real_det(&jac, n);
        // a row that nearly vanishes, or rows that are nearly dependent
        let row_norms: Vec<f64> = jac.chunks(n).map(norm).collect();
        let flat = row_norms.iter().zip(&sc.rows).any(|(r, m)| !(*r > 1e-6 * m));
        let hadamard: f64 = row_norms.iter().product();
        if flat || !(det.abs() >= 1e-8 * hadamard) {
            degenerate = true;
        }
        if norm(&p) > 0.95 * radius {
            near_boundary = true;
        }
        list.push((p, det));
    }
    let bmin = boundary_min(b, y0, radius);
    if !(bmin > BOUNDARY_FLOOR) {
        near_boundary = true;
    }
    BlockRoots { roots: list, degenerate, near_boundary }
}

/// Roots of `h − y0` in the ball of radius `R` from a uniform seed grid, with
/// the sign of the Jacobian determinant at each root. No block splitting.
pub fn find_roots(h: &dyn Field, y0: &[f64], radius: f64, seeds_per_axis: usize) -> Result<Vec<Root>> {
    let n = h.dim();
    if y0.len() != n {
        return Err(Error::DimensionMismatch(format!("y0 has {} entries, field has {n}", y0.len())));
    }
    let b = Block { field: h, comps: (0..n).collect(), vars: (0..n).collect() };
    let res = solve_block(&b, y0, radius, seeds_per_axis);
    if res.near_boundary {
        return Err(Error::Degree(format!("root or small |h| near the boundary of the ball of radius {radius}")));
    }
    Ok(res
        .roots
        .into_iter()
        .map(|(location, det)| Root { location, jacobian_det: det, sign: det.signum() as i32 })
        .collect())
}

struct BlockOutcome {
    value: i64,
    roots: Vec<(Vec<f64>, f64)>,
    y0: Vec<f64>,
    radius: f64,
    trials: usize,
}

fn block_degree(b: &Block, base_y0: &[f64], opts: &DegreeOptions, salt: u64) -> Result<BlockOutcome> {
    let n = b.n();
    let seeds = opts.seeds_per_axis.unwrap_or_else(|| default_seeds(n));
    let mut radius = opts.radius.unwrap_or(4.0 * opts.scale);
    let attempt = |y0: &[f64], radius: &mut f64| -> Result<BlockRoots> {
        for _ in 0..=MAX_GROWTH {
            let r = solve_block(b, y0, *radius, seeds);
            if !r.near_boundary {
                return Ok(r);
            }
            if opts.radius.is_some() {
                return Err(Error::Degree(format!("root or small |h| near the boundary of radius {radius}")));
            }
            *radius *= 2.0;
        }
        Err(Error::Degree(format!("no admissible radius up to {radius}")))
    };
    let first = attempt(base_y0, &mut radius)?;
    let sum = |r: &BlockRoots| r.roots.iter().map(|(_, d)| d.signum() as i64).sum::<i64>();
    if !first.degenerate {
        return Ok(BlockOutcome { value: sum(&first), roots: first.roots, y0: base_y0.to_vec(), radius, trials: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut good: Vec<(i64, BlockRoots, Vec<f64>)> = Vec::new();
    for trial in 1..=opts.max_trials {
        let dir = random_unit(&mut rng, n);
        let mag = 1e-3 * opts.scale * rng.gen_range(0.5..1.0);
        let y0: Vec<f64> = base_y0.iter().zip(&dir).map(|(a, d)| a + mag * d).collect();
        let r = attempt(&y0, &mut radius)?;
        if r.degenerate {
            continue;
        }
        good.push((sum(&r), r, y0));
        if good.len() == opts.agreeing {
            let v = good[0].0;
            if good.iter().any(|g| g.0 != v) {
                let vals: Vec<i64> = good.iter().map(|g| g.0).collect();
                return Err(Error::Degree(format!("perturbed regular values disagree: {vals:?}")));
            }
            let (value, roots, y0) = good.swap_remove(0);
            return Ok(BlockOutcome { value, roots: roots.roots, y0, radius, trials: trial });
        }
    }
    Err(Error::Degree(format!(
        "degenerate roots persisted after {} perturbations of y0",
        opts.max_trials
    )))
}

/// Degree of `h` on a ball around its zero set: sum of `sign det J` over the
/// preimages of a regular value near `y0`.
pub fn degree(h: &dyn Field, opts: &DegreeOptions) -> Result<DegreeResult> {
    let n = h.dim();
    let y0 = opts.y0.clone().unwrap_or_else(|| vec![0.0; n]);
    if y0.len() != n {
        return Err(Error::DimensionMismatch(format!("y0 has {} entries, field has {n}", y0.len())));
    }
    let origin = vec![0.0; n];
    for i in 0..n {
        if (0..n).all(|j| !h.depends(i, j)) && (h.eval_component(i, &origin) - y0[i]).abs() > 0.0 {
            return Ok(DegreeResult {
                value: 0,
                roots: vec![],
                y0_used: y0,
                radius: opts.radius.unwrap_or(4.0 * opts.scale),
                trials: 0,
                method: "roots".into(),
                blocks: 0,
            });
        }
    }
    let mut groups = if opts.decompose { decompose(h) } else { vec![((0..n).collect(), (0..n).collect())] };
    if groups.iter().any(|(c, v)| c.len() != v.len()) {
        groups = vec![((0..n).collect(), (0..n).collect())];
    }
    let row_perm: Vec<usize> = groups.iter().flat_map(|g| g.0.iter().copied()).collect();
    let col_perm: Vec<usize> = groups.iter().flat_map(|g| g.1.iter().copied()).collect();
    let perm_sign = permutation_sign(&row_perm) * permutation_sign(&col_perm);
    let mut outcomes = Vec::new();
    for (gi, (comps, vars)) in groups.iter().enumerate() {
        let b = Block { field: h, comps: comps.clone(), vars: vars.clone() };
        let by0: Vec<f64> = comps.iter().map(|&i| y0[i]).collect();
        outcomes.push(block_degree(&b, &by0, opts, gi as u64 + 1)?);
    }
    let value = perm_sign as i64 * outcomes.iter().map(|o| o.value).product::<i64>();
    let mut y0_used = y0.clone();
    for ((comps, _), o) in groups.iter().zip(&outcomes) {
        for (k, &i) in comps.iter().enumerate() {
            y0_used[i] = o.y0[k];
        }
    }
    // Cartesian product of block roots, capped for reporting.
    let mut roots: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; n], perm_sign)];
    for ((_, vars), o) in groups.iter().zip(&outcomes) {
        let mut next = Vec::new();
        for (loc, det) in &roots {
            for (bl, bd) in &o.roots {
                if next.len() >= ROOT_LIST_CAP {
                    break;
                }
                let mut l = loc.clone();
                for (k, &j) in vars.iter().enumerate() {
                    l[j] = bl[k];
                }
                next.push((l, det * bd));
            }
        }
        roots = next;
    }
    let roots = roots
        .into_iter()
        .map(|(location, det)| Root { location, jacobian_det: det, sign: det.signum() as i32 })
        .collect();
    Ok(DegreeResult {
        value,
        roots,
        y0_used,
        radius: outcomes.iter().map(|o| o.radius).fold(0.0, f64::max),
        trials: outcomes.iter().map(|o| o.trials).sum(),
        method: "roots".into(),
        blocks: groups.len(),
    })
}

/// Index sign convention: `(−1)^{d(d+1)/2 + 1} · deg`.
pub fn charge_from_degree(deg: i64, d: usize) -> i64 {
    if (d * (d + 1) / 2 + 1) % 2 == 0 {
        deg
    } else {
        -deg
    }
}

/// Checks `deg(h1, h2) = deg(h1) · deg(h2)` on independent variable blocks.
pub fn degree_product_check(h1: &dyn Field, h2: &dyn Field, opts: &DegreeOptions) -> Result<bool> {
    let d1 = degree(h1, opts)?.value;
    let d2 = degree(h2, opts)?.value;
    let cat = ConcatField::new(vec![h1, h2]);
    let mut o = opts.clone();
    o.y0 = None;
    Ok(degree(&cat, &o)?.value == d1 * d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{ParseContext, VectorSymbol};

    fn vs(d: usize, k: usize, m: u32, ctx: ParseContext, comps: &[&str]) -> VectorSymbol {
        VectorSymbol::parse(d, k, m, &ctx, comps).unwrap()
    }

    #[test]
    fn identity_map() {
        let h = vs(1, 1, 1, ParseContext::new(1), &["xi1", "x1"]);
        let roots = find_roots(&h, &[0.0, 0.0], 2.0, 20).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0].location.iter().all(|a| a.abs() < 1e-10));
        assert!((roots[0].jacobian_det - 1.0).abs() < 1e-12);
        assert_eq!(degree(&h, &DegreeOptions::default()).unwrap().value, 1);
    }

    #[test]
    fn order_wall_roots() {
        let ctx = ParseContext::new(1).with_param("mu", 1.0).with_param("eta", 1.0).with_param("eps", 0.2);
        let h = vs(1, 1, 2, ctx, &["eta*xi1^2 - mu*snorm(x1; eps)^2", "xi1*x1"]);
        let r = degree(&h, &DegreeOptions::default()).unwrap();
        assert_eq!(r.roots.len(), 2);
        assert_eq!(r.value, 2);
        for root in &r.roots {
            assert!((root.location[0].abs() - 1.0).abs() < 1e-10);
            assert!((root.jacobian_det - 2.0).abs() < 1e-8);
        }
        let ctx = ParseContext::new(1).with_param("mu", -1.0).with_param("eta", 1.0).with_param("eps", 0.2);
        let h = vs(1, 1, 2, ctx, &["eta*xi1^2 - mu*snorm(x1; eps)^2", "xi1*x1"]);
        let r = degree(&h, &DegreeOptions::default()).unwrap();
        assert!(r.roots.is_empty());
        assert_eq!(r.value, 0);
    }

    #[test]
    fn degenerate_winding_needs_perturbation() {
        let h = vs(2, 2, 1, ParseContext::new(2), &["xi1", "xi2", "x1^2 - x2^2", "2*x1*x2"]);
        let r = degree(&h, &DegreeOptions::default()).unwrap();
        assert_eq!(r.value, 2);
        assert!(r.trials >= 3);
        assert_eq!(r.roots.len(), 2);
        assert!(r.y0_used.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn charge_signs() {
        assert_eq!(charge_from_degree(1, 1), 1);
        assert_eq!(charge_from_degree(1, 2), 1);
        assert_eq!(charge_from_degree(1, 3), -1);
        assert_eq!(charge_from_degree(5, 4), -5);
        assert_eq!(charge_from_degree(2, 5), 2);
    }

    #[test]
    fn products() {
        let a = vs(1, 1, 1, ParseContext::new(1), &["xi1", "x1"]);
        let b = vs(1, 1, 1, ParseContext::new(1), &["x1", "xi1"]);
        let gapped = vs(1, 1, 1, ParseContext::new(1), &["xi1^2 + x1^2 + 1", "xi1"]);
        let o = DegreeOptions::default();
        assert!(degree_product_check(&a, &a, &o).unwrap());
        assert!(degree_product_check(&a, &b, &o).unwrap());
        assert!(degree_product_check(&a, &gapped, &o).unwrap());
        let cat = ConcatField::new(vec![&a, &b]);
        assert_eq!(degree(&cat, &o).unwrap().value, -1);
    }

    #[test]
    fn coupled_three_dim_block() {
        let ctx = ParseContext::new(2)
            .with_param("mu", 1.0)
            .with_param("eta", 0.5)
            .with_param("eps", 0.2);
        let h = vs(2, 1, 1, ctx, &["xi1", "xi2", "eta*snorm_inv(xi; eps)*(xi1^2+xi2^2) - mu*x1"]);
        let r = degree(&h, &DegreeOptions::default()).unwrap();
        assert_eq!(r.value, -1);
        assert!((r.roots[0].jacobian_det + 1.0).abs() < 1e-10);
        let r = degree(&h, &DegreeOptions { decompose: false, ..Default::default() }).unwrap();
        assert_eq!(r.value, -1);
    }
}
