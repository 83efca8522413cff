//! Operator-valued Stein spherical means on periodic grids.

// `!(x >= a)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod meansop;
pub mod ncspace;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
