//! Coverage of the unit cube by Poisson cylinders.
//!
//! Trajectories start at the points of a Poisson process on the base
//! `[0,1]^{d-1} x {0}` and move upward, either along straight rays or as
//! Brownian paths in the horizontal coordinates. Dilating every trajectory by
//! a ball or a horizontal disk of radius `r` gives a random cylinder set; this
//! crate samples such sets, answers coverage queries, brackets the smallest
//! radius covering the cube, and evaluates the matching asymptotic formulas.

pub mod coverage;
pub mod error;
pub mod geometry;
pub mod processes;
mod quadrature;
pub mod theory;

pub use error::{Error, Result};
