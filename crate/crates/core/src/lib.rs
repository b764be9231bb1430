//! Numerical laboratory for the Hardy parabolic equation
//! `∂t u − Δu = |x|^{−γ} u^p` and its fractional counterpart.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`]: Gaussian and fractional heat kernels, radial tables.
//! * [`profile`]: singular initial data, critical exponents, the auxiliary
//!   function `H` and explicit supersolution templates.
//! * [`quad`]: heat convolutions, Duhamel integrals, grids and fields.
//! * [`solver`]: monotone Picard iteration and its diagnostics.
//! * [`audit`]: empirical constants and supersolution certificates.
//! * [`explorer`]: configuration, sweeps, threshold bracketing and reports.

pub mod audit;
pub mod error;
pub mod exec;
pub mod explorer;
pub mod integrate;
pub mod kernel;
pub mod profile;
pub mod quad;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
