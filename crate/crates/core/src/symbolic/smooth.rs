//! Scalar regularizers: the ε-smoothed norm and the domain-wall profile.

use crate::error::{Error, Result};

/// Blend `1 + 6s³ − 8s⁴ + 3s⁵` on `s ∈ [0,1]`; matches value, slope and
/// curvature of `1` at `s = 0` and of `1 + s` at `s = 1`.
fn blend(s: f64) -> (f64, f64) {
    let s2 = s * s;
    let v = 1.0 + s2 * s * (6.0 - 8.0 * s + 3.0 * s2);
    let dv = s2 * (18.0 - 32.0 * s + 15.0 * s2);
    (v, dv)
}

/// Value and `r`-derivative of `⟨r⟩_ε`, assuming `eps > 0`.
pub(crate) fn smooth_norm_d(r: f64, eps: f64) -> (f64, f64) {
    let t = eps * r;
    if t <= 1.0 {
        (1.0, 0.0)
    } else if t >= 2.0 {
        (t, eps)
    } else {
        let (v, dv) = blend(t - 1.0);
        (v, eps * dv)
    }
}

/// `⟨r⟩_ε`: equal to 1 for `εr ≤ 1`, to `εr` for `εr ≥ 2`, and a monotone
/// C² blend in between.
pub fn smooth_norm(r: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("r must be nonnegative, got {r}")));
    }
    Ok(smooth_norm_d(r, epsilon).0)
}

/// `m(x) = ⟨x⟩^{m−1} x` with `⟨x⟩ = √(1+x²)`.
pub fn domain_wall(x: f64, m: u32) -> f64 {
    (1.0 + x * x).powf((m as f64 - 1.0) / 2.0) * x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        assert_eq!(smooth_norm(0.5, 1.0).unwrap(), 1.0);
        assert_eq!(smooth_norm(3.0, 1.0).unwrap(), 3.0);
        assert_eq!(smooth_norm(0.0, 0.2).unwrap(), 1.0);
        assert!(smooth_norm(1.0, 0.0).is_err());
        assert!(smooth_norm(1.0, -1.0).is_err());
    }

    #[test]
    fn monotone_and_at_least_one() {
        let mut prev = 0.0;
        for i in 0..=10_000 {
            let r = i as f64 * 1e-3;
            let v = smooth_norm(r, 1.0).unwrap();
            assert!(v >= 1.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn blend_is_c2_at_knots() {
        let (v0, d0) = blend(0.0);
        let (v1, d1) = blend(1.0);
        assert_eq!((v0, d0), (1.0, 0.0));
        assert!((v1 - 2.0).abs() < 1e-15 && (d1 - 1.0).abs() < 1e-15);
        let h = 1e-5;
        let curv = |s: f64| (blend(s + h).1 - blend(s - h).1) / (2.0 * h);
        assert!(curv(h).abs() < 1e-3);
        assert!(curv(1.0 - h).abs() < 1e-3);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for &r in &[0.3, 1.2, 1.5, 1.9, 2.5, 7.0] {
            let h = 1e-6;
            let fd = (smooth_norm(r + h, 1.0).unwrap() - smooth_norm(r - h, 1.0).unwrap()) / (2.0 * h);
            assert!((smooth_norm_d(r, 1.0).1 - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn walls() {
        assert_eq!(domain_wall(0.7, 1), 0.7);
        assert!((domain_wall(1.0, 2) - 2f64.sqrt()).abs() < 1e-15);
        assert!((domain_wall(-1.0, 2) + 2f64.sqrt()).abs() < 1e-15);
        let mut prev = f64::NEG_INFINITY;
        for i in -100..=100 {
            let v = domain_wall(i as f64 * 0.1, 3);
            assert!(v > prev);
            prev = v;
        }
    }
}
