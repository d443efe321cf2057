//! Singular values of modular functions at imaginary quadratic points.
//!
//! Values of `j`, `η`, Weierstrass invariants, Fricke functions and principal
//! moduli are computed to arbitrary precision by q-series, with independent
//! lattice sums as a cross-check. On top of that sit an explicit reciprocity
//! engine for Galois conjugates over `K` and certified class polynomials.

pub mod class_poly;
pub mod cli;
pub mod error;
pub mod hauptmodul;
pub mod modular;
pub mod numerics;
pub mod quad_fields;
pub mod reciprocity;
pub mod sl2;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::PrecisionContext;
