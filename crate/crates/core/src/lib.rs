//! Pseudo-spectral toolkit for the nondimensionalized three-dimensional
//! capillary-gravity water-wave system in the weakly transverse long-wave
//! regime.
//!
//! The Dirichlet–Neumann operator is computed by flattening the fluid
//! domain onto the strip `torus x [-1, 0]` and solving a variable
//! coefficient elliptic problem with Chebyshev collocation in depth and
//! Fourier modes horizontally.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheb;
pub mod dn;
pub mod elliptic;
pub mod error;
pub mod field;
mod fourier;
pub mod grid;
pub mod kp;
pub mod linearized;
pub mod params;
pub mod random;
pub mod snapshot;
pub mod spectral;
pub mod strip;
pub mod symbol;
pub mod waterwave;

pub use error::{Error, Result};
pub use field::{StripField, SurfaceField};
pub use grid::{GridSpec, SpectralGrid};
pub use params::{ScaleParams, Variant};
pub use rustfft::num_complex::Complex64;
