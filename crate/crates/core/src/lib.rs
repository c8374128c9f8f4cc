//! Extremes of homogeneous two-parameter Gaussian fields.
//!
//! The crate simulates the separable stable field exactly on grids, evaluates
//! the high-level asymptotics of its supremum (Pickands constants, scaling
//! functions, Gumbel-mixture limit laws, random-radius tails) and checks the
//! limit theorems by seeded Monte Carlo.

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Kronrod nodes are kept as published.
#![allow(clippy::excessive_precision)]

pub mod asymptotics;
pub mod corr;
pub mod error;
pub mod experiments;
pub mod field;
pub mod parallel;
pub mod pickands;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
