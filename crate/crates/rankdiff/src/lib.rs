//! Planar diffusion with rank-based characteristics.
//!
//! Two particles move on the line; the leader gets drift `-h` and volatility
//! `rho`, the laggard drift `g` and volatility `sigma`. The crate simulates the
//! system, samples it exactly through its skew representation, evaluates the
//! closed-form laws, classifies square roots of the diffusion matrix, and
//! computes the time-reversed drift.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bangbang;
pub mod classifier;
pub mod densities;
pub mod error;
pub mod harness;
pub mod model;
pub mod normal;
pub mod planar;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod timereversal;

pub use error::{Error, Result};
pub use model::{sign, validate_params, InitialState, ModelParams};
pub use rng::SeedSpec;
