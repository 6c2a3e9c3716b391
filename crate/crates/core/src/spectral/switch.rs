//! Smooth monotone switch functions: 0 left of the left knot, 1 right of the
//! right knot.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `10t³ − 15t⁴ + 6t⁵`
    Quintic,
    /// `35t⁴ − 84t⁵ + 70t⁶ − 20t⁷`
    Septic,
    /// `ψ(t) / (ψ(t) + ψ(1 − t))` with `ψ(t) = e^{−1/t}`; flat to all orders.
    Smooth,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quintic" => Ok(Profile::Quintic),
            "septic" => Ok(Profile::Septic),
            "smooth" => Ok(Profile::Smooth),
            _ => Err(Error::InvalidArgument(format!("unknown switch profile `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchFunction {
    pub left: f64,
    pub right: f64,
    pub profile: Profile,
}

fn psi(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else {
        let v = (-1.0 / t).exp();
        (v, v / (t * t))
    }
}

/// Ramp on `[0, 1]` and its derivative.
fn ramp(profile: Profile, t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    match profile {
        Profile::Quintic => {
            let t2 = t * t;
            (t2 * t * (10.0 - 15.0 * t + 6.0 * t2), 30.0 * t2 * (1.0 - t) * (1.0 - t))
        }
        Profile::Septic => {
            let t4 = t.powi(4);
            (
                t4 * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t),
                140.0 * t.powi(3) * (1.0 - t).powi(3),
            )
        }
        Profile::Smooth => {
            let (a, da) = psi(t);
            let (b, db) = psi(1.0 - t);
            let s = a + b;
            (a / s, (da * b + a * db) / (s * s))
        }
    }
}

impl SwitchFunction {
    pub fn new(left: f64, right: f64, profile: Profile) -> Result<Self> {
        if !(left < right) || !left.is_finite() || !right.is_finite() {
            return Err(Error::InvalidArgument(format!("switch knots must satisfy left < right, got [{left}, {right}]")));
        }
        Ok(SwitchFunction { left, right, profile })
    }

    pub fn value(&self, x: f64) -> f64 {
        ramp(self.profile, (x - self.left) / (self.right - self.left)).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        ramp(self.profile, (x - self.left) / (self.right - self.left)).1 / (self.right - self.left)
    }

    /// Same ramp moved by `dx`.
    pub fn shifted(&self, dx: f64) -> Self {
        SwitchFunction { left: self.left + dx, right: self.right + dx, ..*self }
    }
}
