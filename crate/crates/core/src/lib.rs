//! Topological charges of elliptic domain-wall Hamiltonians, computed by
//! degree theory, by the index integral of the Fredholm symbol, and by
//! spectral flow and trace formulas for the line conductivity.

pub mod augment;
pub mod catalog;
pub mod clifford;
pub mod degree;
pub mod error;
pub mod fhindex;
pub mod linalg;
pub mod report;
pub mod spectral;
pub mod symbolic;

pub use error::{Error, Result};
