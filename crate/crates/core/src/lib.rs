//! Periodic homogenization of a 2D elastic medium with incompressible
//! Stokes inclusions: cell problems, the homogenized tensor, ε-scale and
//! homogenized solves, and two-scale corrector error studies.

// `!(x > 0.0)` rejects NaN on purpose; tensor code indexes by component.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cell;
pub mod corrector;
pub mod eps;
mod error;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod homogenize;
pub mod saddle;

pub use error::{Error, Result};
