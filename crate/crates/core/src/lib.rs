//! Noisy circuit simulation and error mitigation for Fourier moments of
//! small lattice Hamiltonians.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod circuit;
pub mod crg;
pub mod error;
pub mod experiments;
pub mod estimation;
pub mod lattice;
pub mod linalg;
pub mod mitigation;
pub mod noise;
pub mod pauli;
pub mod rng;
pub mod state;
pub mod trotter;
pub mod vqe;

pub use error::{QemError, Result};
