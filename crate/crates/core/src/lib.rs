//! Numerical laboratory for variational differential equations of
//! two-dimensional field theories: the action on swept surfaces, the
//! propagation-time functional on curve space, boundary momenta, the
//! generalized Hamilton–Jacobi equation, and the functional Schrödinger
//! equation evolved along foliations.

// NaN-rejecting `!(a >= b)` guards and index loops over parallel arrays are
// deliberate throughout the numerics.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod action;
pub mod curves;
pub mod eikonal;
pub mod error;
pub mod linalg;
pub mod models;
pub mod numerics;
pub mod presets;
pub mod quantum;
pub mod verify;

pub use error::{Error, Result};
