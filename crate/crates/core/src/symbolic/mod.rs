//! Expression language and data model for symbols.

pub mod ellipticity;
pub mod expr;
pub mod file;
pub mod matrix;
pub mod parse;
pub mod smooth;
pub mod vector;

pub use ellipticity::{ellipticity_probe, EllipticityReport, ProbeOptions};
pub use expr::{Expr, FactorClass, Point, Var};
pub use file::{parse_model_file, ModelFile};
pub use matrix::{separate, to_matrix_symbol, SeparableMatrixSymbol, Term};
pub use parse::{parse_factor, ParseContext};
pub use smooth::{domain_wall, smooth_norm};
pub use vector::VectorSymbol;
