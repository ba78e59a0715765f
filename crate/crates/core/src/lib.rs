//! Empirical sp³s* tight-binding band structures for zinc-blende bulk
//! crystals, [001] superlattices and quantum wells, with a genetic-algorithm
//! fitter for the orbital interaction parameters.

// `!(x > 0.0)` is used on purpose so that NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod alloy;
pub mod bulk;
pub mod constraints;
pub mod eigen;
pub mod error;
pub mod fitting;
pub mod hermitian;
pub mod io;
pub mod model;
pub mod properties;
pub mod superlattice;
pub mod units;

pub use error::{Error, Result};
pub use hermitian::HermitianMatrix;
pub use model::{Material, OipSet, WaveVector};
