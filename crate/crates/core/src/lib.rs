//! Mean-force Gibbs states of qubits coupled to structured bosonic reservoirs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algebra;
pub mod error;
pub mod quad;
pub mod engine;
pub mod narrow;
pub mod oracle;
pub mod spectral;
pub mod sweep;
pub mod weak;

pub use algebra::{Beta, DensityMatrix, Operator};
pub use error::{Error, Result};
