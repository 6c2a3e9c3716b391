//! Line conductivity of the stage-(d−1) Hamiltonian: spectral flow over the
//! last momentum, and the commutator and Toeplitz traces for `d = 1`.

pub mod fiber;
pub mod flow;
pub mod hermite;
pub mod switch;
pub mod traces;

use serde::Serialize;

use crate::symbolic::SeparableMatrixSymbol;

pub use fiber::FiberBuilder;
pub use flow::{count_below, flow_integral, flow_integrals, flow_support, spectral_flow, Crossing, FlowResult};
pub use switch::{Profile, SwitchFunction};
pub use traces::{sigma_trace, toeplitz_trace, trace_support, TraceResult};

/// Discretization and switch settings for the spectral checks.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralModel {
    #[serde(skip)]
    pub hamiltonian: SeparableMatrixSymbol,
    pub scale: f64,
    /// Hermite modes per confined axis.
    pub basis: usize,
    /// Fiber window `[−Ξ, Ξ]`.
    pub xi_max: f64,
    pub xi_points: usize,
    pub e_ref: f64,
    /// Momentum shift on tail modes; `None` means `3Ξ`.
    pub tail_shift: Option<f64>,
    pub phi: SwitchFunction,
    /// Use `1 − φ` in the traces.
    pub phi_flip: bool,
    pub grid_n: usize,
    pub length: f64,
    /// Shift of the up-ramp of `P`, in grid cells.
    pub p_shift: i32,
    pub p_profile: Profile,
}

pub fn default_basis(d: usize) -> usize {
    match d {
        0 | 1 => 1,
        2 => 64,
        _ => 24,
    }
}

pub fn default_xi_points(d: usize) -> usize {
    if d <= 2 {
        200
    } else {
        48
    }
}

impl SpectralModel {
    pub fn new(hamiltonian: SeparableMatrixSymbol, scale: f64) -> Self {
        let d = hamiltonian.d;
        let scale = if scale > 0.0 { scale } else { 1.0 };
        SpectralModel {
            hamiltonian,
            scale,
            basis: default_basis(d),
            xi_max: 6.0 * scale,
            xi_points: default_xi_points(d),
            e_ref: 0.0,
            tail_shift: None,
            // U = exp(2πiφ(H)) has a kernel of range ~2π/width; ±scale keeps it
            // well inside the default cell.
            phi: SwitchFunction { left: -scale, right: scale, profile: Profile::Quintic },
            phi_flip: false,
            grid_n: 512,
            length: 40.0,
            p_shift: 0,
            p_profile: Profile::Quintic,
        }
    }

    /// Moves the reference energy and recenters `φ` on it.
    pub fn with_e_ref(mut self, e: f64) -> Self {
        let mid = 0.5 * (self.phi.right + self.phi.left);
        self.phi = self.phi.shifted(e - mid);
        self.e_ref = e;
        self
    }

    pub fn tail_shift(&self) -> f64 {
        self.tail_shift.unwrap_or(3.0 * self.xi_max)
    }
}
