//! Numerical laboratory for the field-road KPP system in periodic media.
//!
//! A road `y = 0` carrying the density `u(t, x)` is coupled to a field
//! `0 < y < R` carrying `v(t, x, y)`. The crate builds finite-difference
//! discretizations of this system on periodic strips and provides the
//! time stepper, steady states, the principal eigenvalue `λ_R(α)` with its
//! half-plane limit, spreading speeds and front diagnostics.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csvio;
pub mod diagnostics;
pub mod discrete;
pub mod error;
pub mod model;
pub mod simulate;
pub mod spectral;
pub mod speed;
pub mod steady;

pub use error::{Error, Result};
