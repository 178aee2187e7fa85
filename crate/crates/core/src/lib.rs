//! Numerical laboratory for semilinear elliptic equations with measure data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod absorption;
pub mod capacity;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod linalg;
pub mod measure;
pub mod nonlinearity;
pub mod radial_ode;
pub mod source;
pub mod trace;

pub use error::{Error, Result};
