//! Sketching toolkit for constrained least squares.
//!
//! The pipeline: build a random sketch operator ([`sketch`]), compress a
//! least-squares problem over one of the supported constraint geometries
//! ([`model`]), solve original and sketched programs ([`solve`]), and relate
//! the two through width-based sketch sizing and optimality certificates
//! ([`geometry`]). The [`harness`] module reproduces the benchmark
//! experiments end to end.

// Indexed loops mirror the written math; negated comparisons also reject NaN.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod rng;
pub mod sketch;
pub mod solve;
pub mod tensor;

pub use error::{Error, Result};
