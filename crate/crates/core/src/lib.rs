//! Immune-memory simulations: a generational clonal-selection model in a
//! circular shape space and a spatial agent model on a toroidal grid, with
//! the statistics used to compare primary and secondary responses.

// Range checks are written `!(x >= lo)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clonal;
pub mod error;
pub mod scenario;
pub mod seed;
pub mod shape;
pub mod spatial;
pub mod stats;

pub use error::{ConfigError, Error, Result};
