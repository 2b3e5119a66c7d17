//! Goursat problem for the hyperbolic Ernst equation solved through a
//! matrix Riemann–Hilbert problem on the two-sheeted spectral curve.

pub mod boundary_data;
pub mod cauchy;
pub mod diagnostics;
pub mod error;
pub mod euler_darboux;
pub mod exact_solutions;
pub mod geometry;
pub mod quad;
pub mod rh_solver;
pub mod volterra;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
