//! Product quadratures on unit spheres `S^{n−1} ⊂ R^n` with oriented tangent
//! frames.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::real_det;

/// Nodes on the unit sphere, each with `n − 1` orthonormal tangent vectors.
/// Frames are oriented so that `det[ν, t_1, …, t_{n−1}] > 0` for the outward
/// normal `ν`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    /// Ambient dimension `n`.
    pub n: usize,
    /// Row-major `len × n`.
    pub nodes: Vec<f64>,
    /// Row-major `len × (n−1) × n`.
    pub frames: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.n..(i + 1) * self.n]
    }

    /// Tangent `j` at node `i`.
    pub fn tangent(&self, i: usize, j: usize) -> &[f64] {
        let n = self.n;
        let base = i * (n - 1) * n + j * n;
        &self.frames[base..base + n]
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

/// Surface area of `S^{n−1}`.
pub fn sphere_area(n: usize) -> f64 {
    // |S^{n−1}| = 2π^{n/2} / Γ(n/2)
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / gamma_half_integer(n)
}

/// Γ(n/2) for positive integer `n`.
fn gamma_half_integer(n: usize) -> f64 {
    if n % 2 == 0 {
        (1..n / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut a = 0.5;
        while a + 1e-9 < n as f64 / 2.0 {
            g *= a;
            a += 1.0;
        }
        g
    }
}

/// Quadrature on `S^{n−1}` in hyperspherical coordinates: `n_theta`
/// Gauss–Legendre points for each polar angle and `n_phi` trapezoid points
/// for the azimuth. For `n = 2` only the azimuthal grid is used.
pub fn sphere_quadrature(n: usize, n_theta: usize, n_phi: usize) -> Result<SphereQuadrature> {
    if !(2..=8).contains(&n) {
        return Err(Error::InvalidArgument(format!("sphere quadrature needs 2 ≤ n ≤ 8, got {n}")));
    }
    if n_phi == 0 || (n > 2 && n_theta == 0) {
        return Err(Error::InvalidArgument("quadrature sizes must be positive".into()));
    }
    let polar = n - 2;
    let (gx, gw) = gauss_legendre(n_theta.max(1));
    // Polar angles via θ = π(u+1)/2 on GL points in u.
    let thetas: Vec<f64> = gx.iter().map(|u| PI * (u + 1.0) / 2.0).collect();
    let tw: Vec<f64> = gw.iter().map(|w| w * PI / 2.0).collect();
    let count = n_theta.pow(polar as u32) * n_phi;
    let mut q = SphereQuadrature {
        n,
        nodes: Vec::with_capacity(count * n),
        frames: Vec::with_capacity(count * (n - 1) * n),
        weights: Vec::with_capacity(count),
    };
    let mut idx = vec![0usize; polar];
    let mut angles = vec![0.0; n - 1];
    let mut tangents = vec![0.0; (n - 1) * n];
    let mut point = vec![0.0; n];
    let mut mat = vec![0.0; n * n];
    loop {
        let mut wt = 1.0;
        for (i, &k) in idx.iter().enumerate() {
            angles[i] = thetas[k];
            wt *= tw[k] * thetas[k].sin().powi((n - 2 - i) as i32);
        }
        for p in 0..n_phi {
            angles[n - 2] = 2.0 * PI * p as f64 / n_phi as f64;
            coords(&angles, &mut point, &mut tangents);
            let w = wt * 2.0 * PI / n_phi as f64;
            mat[..n].copy_from_slice(&point);
            mat[n..].copy_from_slice(&tangents);
            if real_det(&mat, n) < 0.0 {
                for t in &mut tangents[(n - 2) * n..] {
                    *t = -*t;
                }
            }
            q.nodes.extend_from_slice(&point);
            q.frames.extend_from_slice(&tangents);
            q.weights.push(w);
        }
        // advance the polar multi-index
        let mut c = 0;
        while c < polar {
            idx[c] += 1;
            if idx[c] < n_theta {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
        if c == polar {
            break;
        }
    }
    Ok(q)
}

/// Point and unit coordinate tangents for hyperspherical angles
/// `(θ_1, …, θ_{n−2}, φ)`.
fn coords(angles: &[f64], point: &mut [f64], tangents: &mut [f64]) {
    let n = point.len();
    // x_i = (Π_{j<i} sin a_j) cos a_i for i < n−1, x_{n−1} = Π sin a_j
    let mut prefix = vec![1.0; n];
    for i in 0..n - 1 {
        prefix[i + 1] = prefix[i] * angles[i].sin();
    }
    for i in 0..n - 1 {
        point[i] = prefix[i] * angles[i].cos();
    }
    point[n - 1] = prefix[n - 1];
    for a in 0..n - 1 {
        let t = &mut tangents[a * n..(a + 1) * n];
        t.iter_mut().for_each(|v| *v = 0.0);
        // ∂x/∂a_a divided by the scale factor Π_{j<a} sin a_j
        let (s, c) = angles[a].sin_cos();
        t[a] = -s;
        let mut tail = c;
        for i in a + 1..n - 1 {
            t[i] = tail * angles[i].cos();
            tail *= angles[i].sin();
        }
        t[n - 1] = tail;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m10: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((m10 - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(6) - PI.powi(3)).abs() < 1e-12);
        for n in 2..=6 {
            let q = sphere_quadrature(n, 16, 20).unwrap();
            let s: f64 = q.weights.iter().sum();
            assert!((s / sphere_area(n) - 1.0).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn circle_trapezoid_exactness() {
        let q = sphere_quadrature(2, 0, 16).unwrap();
        for k in 1..16 {
            let s: f64 = (0..q.len())
                .map(|i| {
                    let p = q.node(i);
                    q.weights[i] * (k as f64 * p[1].atan2(p[0])).cos()
                })
                .sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn frames_orthonormal_and_oriented() {
        for n in 2..=6 {
            let q = sphere_quadrature(n, 5, 8).unwrap();
            for i in 0..q.len() {
                let p = q.node(i);
                assert!((p.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-13);
                let mut mat = p.to_vec();
                for a in 0..n - 1 {
                    let t = q.tangent(i, a);
                    assert!(t.iter().zip(p).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-13);
                    for b in 0..n - 1 {
                        let dot: f64 = t.iter().zip(q.tangent(i, b)).map(|(x, y)| x * y).sum();
                        let target = if a == b { 1.0 } else { 0.0 };
                        assert!((dot - target).abs() < 1e-12);
                    }
                    mat.extend_from_slice(t);
                }
                assert!((real_det(&mat, n) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn refinement_converges_on_smooth_integrand() {
        // ∫_{S^3} x_1^2 x_2^4 dS = 2π² · 3/(4·6·8)
        let exact = 2.0 * PI * PI * 3.0 / 192.0;
        let err = |m: usize| {
            let q = sphere_quadrature(4, m, 2 * m).unwrap();
            let s: f64 = (0..q.len()).map(|i| q.weights[i] * q.node(i)[0].powi(2) * q.node(i)[1].powi(4)).sum();
            (s - exact).abs()
        };
        assert!(err(24) < 1e-12);
        assert!(err(4) > err(8));
        let rough = |m: usize| {
            let q = sphere_quadrature(4, m, 2 * m).unwrap();
            let s: f64 = (0..q.len()).map(|i| q.weights[i] * (5.0 * q.node(i)[0]).cos()).sum();
            s
        };
        let fine = rough(40);
        assert!((rough(8) - fine).abs() > (rough(12) - fine).abs());
    }
}
