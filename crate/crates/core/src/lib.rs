#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
pub mod config;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod hr;
pub mod labeling;
pub mod lap;
pub mod lattice;
pub mod loss;
pub mod report;
pub mod sim;
pub mod sublattice;
pub mod verify;

pub use error::{Error, Result};
