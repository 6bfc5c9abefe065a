//! Total-variation Lavrentiev regularization for identifying the source
//! term of `y_t + y³ − Δy = u` on `(0,1) × (0,1)`, solved with a nested
//! inertial primal-dual method.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grids;
pub mod inverse;
pub mod output;
pub mod pde;
pub mod pdsolver;
pub mod prox;
pub mod temporal;
pub mod tridiag;

pub use error::{Error, Result};
