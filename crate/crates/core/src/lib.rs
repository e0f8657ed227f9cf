//! Numerical toolkit for timelike minimal Lagrangian surfaces in the indefinite complex
//! hyperbolic plane CH^2_1.
//!
//! The pipeline runs from Tzitzeica data to surfaces:
//!
//! 1. [`tzitzeica`] solves the Goursat problem for `omega` on null coordinates.
//! 2. [`frame`] assembles the spectral family of Maurer-Cartan forms and integrates the
//!    extended frame.
//! 3. [`surface`] extracts the horizontal lift and recovers the invariants from it.
//! 4. [`gaussmap`] builds the normalized frame, the Gauss map into the quasi 6-symmetric
//!    space and the primitive harmonicity test.
//!
//! [`linalg`] and [`loop_algebra`] carry the underlying matrix groups and twisted loops,
//! [`grid`] the node fields and difference stencils, and [`export`] the CSV and OBJ formats.

pub mod error;
pub mod export;
pub mod frame;
pub mod gaussmap;
pub mod grid;
pub mod linalg;
pub mod loop_algebra;
pub mod surface;
pub mod tzitzeica;

pub use error::{Error, Result};
