//! Collective Rabi oscillations of cold colliding atom pairs coupled to a
//! single cavity mode, and the trap-loss spectra they produce.
//!
//! The crate is organized bottom-up:
//!
//! - [`constants`]: physical constants and the resolved species parameters
//! - [`potential`]: the −C₃/R³ curve, Condon and escape radii
//! - [`kinematics`]: classical in-fall times t₀, t_c, t_e
//! - [`cavity`]: mode geometry and the collective coupling Ω̃(δ)
//! - [`dynamics`]: the reduced master equation and its closed-form solution
//! - [`traploss`]: single/multiple-passage losses and the detuning scan
//! - [`quadrature`]: adaptive Gauss–Kronrod integration
//! - [`setup`]: a full run description (species, cavity, scan)
//! - [`validation`]: the self-check suite behind `cavloss validate`

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod constants;
pub mod dynamics;
mod error;
pub mod kinematics;
pub mod potential;
pub mod quadrature;
pub mod setup;
pub mod traploss;
pub mod validation;

pub use error::{Error, Result};
