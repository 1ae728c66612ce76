//! Kinetic equations with heavy-tail equilibria and their anomalous
//! (fractional) diffusion limits.
//!
//! The crate solves `ε^α ∂_t f + ε v ∂_x f = L(f)` on the periodic torus,
//! evaluates the auxiliary test functions `χ^ε` of the moment method and the
//! rescaled operator `𝓛^ε(φ)`, and builds the limit objects: the fractional
//! Laplacian (Fourier multiplier and principal-value forms), the kernel
//! `γ(x, y)` of the space-dependent limit operator, and solvers for both limit
//! equations.

pub mod acceptance;
pub mod auxiliary;
pub mod collision;
pub mod config;
pub mod equilibria;
pub mod fractional;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kinetic;
pub mod report;
pub mod special;
pub mod velocity_grid;

pub use error::{Error, Result};
