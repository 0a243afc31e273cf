//! Rigorous lower bounds on the condensate density of superstable Bose gases
//! whose one-particle spectrum has a gap `Δ` above the zero mode.
//!
//! The bounds compare the interacting gas with an exactly solvable mean-field
//! reference gas ([`meanfield_gas`]). All closed-form mean-field results can be
//! checked against the exact finite-volume oracle in [`finite_volume`].
//!
//! Units are reduced: `ħ²/2m = 1` and `k_B = 1`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bec_bound;
pub mod error;
pub mod finite_volume;
pub mod ideal_gas;
pub mod meanfield_gas;
pub mod potential;
pub mod special_functions;
pub mod verification;

mod quadrature;

pub use error::{BecError, Result};
