//! Design and verification of finite-dimensional observer-based PI boundary
//! regulation for 1-D reaction-diffusion equations.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficient;
pub mod equilibrium;
pub mod error;
pub mod ode;
pub mod quadrature;
pub mod simulator;
pub mod spectral_model;
pub mod sturm_liouville;
pub mod synthesis;
mod tridiagonal;

pub use coefficient::CoefficientFunction;
pub use error::{Error, Result};
