// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod damped;
pub mod diagnostics;
pub mod hum;
pub mod inequalities;
pub mod krylov;
pub mod observability;
pub mod runner;
pub mod scenario;
pub mod verify;
pub mod torus;
pub mod weights;

pub use error::{Error, Result};
