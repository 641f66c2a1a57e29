//! Hopf bifurcation analysis of a delayed P53–MDM2 feedback model.
//!
//! The pipeline runs equilibrium → linear stability → critical delay →
//! centre-manifold normal form → direct DDE simulation. Each stage lives in
//! its own module and is usable on its own.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod equilibrium;
pub mod stability;
pub mod normal_form;
pub mod simulation;
pub mod config;
pub mod report;

pub use error::{Error, Result};
pub use model::{ModelParams, StateVec};
