//! Simulation and verification of locally optimal feedback protocols for
//! continuously measured quantum systems near purity.
//!
//! * [`qcore`]: complex matrices, Hermitian eigensolver, seeded noise.
//! * [`sme`]: stochastic master equation steps and closed-loop trajectories.
//! * [`lop`]: locally optimal observables, N = 3 / N = 4 protocols, and the
//!   reduced eigenvalue equations.
//! * [`analysis`]: closed-form bounds, rate fitting, HJB maximization.
//! * [`cli`]: configuration, ensembles, reports and output files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod lop;
pub mod qcore;
pub mod sme;

pub use error::{Error, Result};
