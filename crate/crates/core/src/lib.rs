//! Finite-dimensional laboratory for firmly nonexpansive operators.
//!
//! - [`linalg`]: points of `R^d`, product points of `X^m`, the standard and
//!   weighted inner products.
//! - [`operators`]: projectors, resolvents, translations, compositions,
//!   convex combinations, and Monte Carlo checkers.
//! - [`productspace`]: the cyclic shift `R`, `M = Id − R`, its section `L`,
//!   the closed-form Moore–Penrose inverse `M†`, the diagonal projectors and
//!   the weighted averaging map `Q`, with a dense-matrix oracle.
//! - [`dynamics`]: orbits, displacement diagnostics, drift estimation,
//!   cyclic sweeps and asymptotic-regularity classification.

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod productspace;

pub use error::{Error, Result};
pub use linalg::{Point, ProductPoint, Weights};
pub use operators::{OperatorSpec, SetSpec};
