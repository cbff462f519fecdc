//! Escaping dynamics of the exponential family `E_k(z) = exp(z) + k` through
//! its symbolic model.
//!
//! The model space consists of pairs `(s, t)` of an external address `s` and
//! a potential `t >= 0`, acted on by `F(s, t) = (sigma(s), e^t - 1 - 2pi|s_2|)`.
//! [`ray`] builds the map `g` from model points to the dynamical plane,
//! [`conjugacy`] inverts it and composes two of them, and the remaining
//! modules turn the combinatorial statements about addresses into predicates.

// Negated comparisons `!(x < y)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod address;
pub mod combinatorics;
pub mod conjugacy;
pub mod endpoint;
pub mod model;
pub mod paramspace;
pub mod ray;

pub use address::{AddressError, ExternalAddress, ParseAddressError, TailRule};
pub use model::{AddressClass, ModelError, ModelPoint, SurvivalVerdict};
pub use num_complex::Complex64;

pub const TWO_PI: f64 = std::f64::consts::TAU;
