//! Small dense helpers shared by the symbol, index and spectral code.
//!
//! The matrices handled here are at most a few dozen rows (spinor blocks and
//! Jacobians), so plain partial-pivoting LU is used instead of a LAPACK call.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let s = a[[i, j]];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[[i * br + p, j * bc + q]] = s * b[[p, q]];
                }
            }
        }
    }
    out
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Max-abs entry norm.
pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn frobenius(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// LU factorization with partial pivoting of a complex square matrix.
pub struct ComplexLu {
    lu: Array2<C64>,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl ComplexLu {
    pub fn new(a: &ArrayView2<C64>) -> Self {
        let n = a.nrows();
        let mut lu = a.to_owned();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (mut p, mut best) = (k, lu[[k, k]].norm());
            for i in k + 1..n {
                let v = lu[[i, k]].norm();
                if v > best {
                    p = i;
                    best = v;
                }
            }
            if best == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[[k, k]];
            for i in k + 1..n {
                let f = lu[[i, k]] / piv;
                lu[[i, k]] = f;
                for j in k + 1..n {
                    let t = lu[[k, j]];
                    lu[[i, j]] -= f * t;
                }
            }
        }
        Self {
            lu,
            perm,
            sign,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn det(&self) -> C64 {
        let mut d = C64::new(self.sign, 0.0);
        for k in 0..self.lu.nrows() {
            d *= self.lu[[k, k]];
        }
        d
    }

    /// Solves `A X = B` for a matrix right-hand side.
    pub fn solve(&self, b: &ArrayView2<C64>) -> Option<Array2<C64>> {
        if self.singular {
            return None;
        }
        let n = self.lu.nrows();
        let m = b.ncols();
        let mut x = Array2::zeros((n, m));
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).assign(&b.row(p));
        }
        for c in 0..m {
            for i in 0..n {
                let mut s = x[[i, c]];
                for j in 0..i {
                    s -= self.lu[[i, j]] * x[[j, c]];
                }
                x[[i, c]] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[[i, c]];
                for j in i + 1..n {
                    s -= self.lu[[i, j]] * x[[j, c]];
                }
                x[[i, c]] = s / self.lu[[i, i]];
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Array2<C64>> {
        self.solve(&identity(self.lu.nrows()).view())
    }
}

/// Determinant of a small real row-major matrix.
pub fn real_det(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if m[i * n + k].abs() > m[p * n + k].abs() {
                p = i;
            }
        }
        let piv = m[p * n + k];
        if piv == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            det = -det;
        }
        det *= piv;
        for i in k + 1..n {
            let f = m[i * n + k] / piv;
            for j in k..n {
                m[i * n + j] -= f * m[k * n + j];
            }
        }
    }
    det
}

/// Solves the small real system `A x = b` in place; returns false when singular.
pub fn real_solve(a: &[f64], b: &mut [f64], n: usize) -> bool {
    let mut m = a.to_vec();
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if m[i * n + k].abs() > m[p * n + k].abs() {
                p = i;
            }
        }
        let piv = m[p * n + k];
        if piv == 0.0 || !piv.is_finite() {
            return false;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / piv;
            for j in k..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            b[i] -= f * b[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= m[i * n + j] * b[j];
        }
        b[i] = s / m[i * n + i];
    }
    b.iter().all(|v| v.is_finite())
}

/// Sign of a permutation given as images of `0..n`.
pub fn permutation_sign(p: &[usize]) -> f64 {
    let mut seen = vec![false; p.len()];
    let mut sign = 1.0;
    for s in 0..p.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut j = s;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}


/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// matrix. The input is copied to column-major order first: for row-major
/// complex input the LAPACK wrapper hands back eigenvectors of the transpose,
/// i.e. the complex conjugates.
pub fn eigh(a: &Array2<C64>) -> crate::error::Result<(Vec<f64>, Array2<C64>)> {
    use ndarray::ShapeBuilder;
    use ndarray_linalg::{EighInto, UPLO};
    let n = a.nrows();
    let mut f = Array2::<C64>::zeros((n, n).f());
    f.assign(a);
    let (vals, vecs) = f.eigh_into(UPLO::Upper)?;
    Ok((vals.to_vec(), vecs))
}

/// Compares one BLAS-backed complex product against a direct sum. Some
/// OpenBLAS kernels return wrong level-3 results on hosts they misdetect;
/// everything dense downstream would then be silently wrong.
pub fn blas_self_check() -> crate::error::Result<()> {
    use std::sync::OnceLock;
    static CHECK: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    CHECK
        .get_or_init(|| {
            let n = 256;
            let a = Array2::from_shape_fn((n, n), |(i, j)| C64::new(((i * 13 + j * 7) % 17) as f64 - 8.0, ((i + 3 * j) % 5) as f64));
            let b = Array2::from_shape_fn((n, n), |(i, j)| C64::new(((i * 5 + j * 11) % 19) as f64 - 9.0, 0.5));
            let c = a.dot(&b);
            for &(i, j) in &[(0, 0), (17, 203), (128, 5), (255, 255), (200, 77)] {
                let s: C64 = (0..n).map(|k| a[[i, k]] * b[[k, j]]).sum();
                if (s - c[[i, j]]).norm() > 1e-9 * s.norm().max(1.0) {
                    return Err("BLAS matrix product failed a self-check; on this host set OPENBLAS_CORETYPE=Haswell".to_string());
                }
            }
            Ok(())
        })
        .clone()
        .map_err(crate::error::Error::Linalg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn lu_inverse_roundtrip() {
        let a = array![
            [C64::new(2.0, 1.0), C64::new(0.5, 0.0)],
            [C64::new(-1.0, 0.0), C64::new(0.0, 3.0)]
        ];
        let lu = ComplexLu::new(&a.view());
        let inv = lu.inverse().unwrap();
        let prod = a.dot(&inv);
        assert!(max_abs(&(prod - identity(2)).view()) < 1e-14);
        let det = a[[0, 0]] * a[[1, 1]] - a[[0, 1]] * a[[1, 0]];
        assert!((lu.det() - det).norm() < 1e-14);
    }

    #[test]
    fn real_det_and_solve() {
        let a = [0.0, 0.0, 2.0, 0.0, 3.0, 0.0, 5.0, 0.0, 0.0];
        assert!((real_det(&a, 3) + 30.0).abs() < 1e-12);
        let mut b = [2.0, 3.0, 5.0];
        assert!(real_solve(&a, &mut b, 3));
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12 && (b[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigh_vectors_solve_row_major_input() {
        let a = Array2::from_shape_fn((5, 5), |(i, j)| C64::new(((i * 3 + j) % 4) as f64, i as f64 - j as f64));
        let h = &a + &adjoint(&a.view());
        let (e, v) = eigh(&h).unwrap();
        for c in 0..5 {
            let r = &h.dot(&v.column(c)) - &v.column(c).mapv(|z| z * e[c]);
            assert!(r.iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn permutation_signs() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1.0);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1.0);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1.0);
        assert_eq!(permutation_sign(&[0, 2, 1, 3]), -1.0);
    }
}
