//! Numerical laboratory for random magnetic Schrodinger operators on a cylinder
//! with two confining walls: edge states, their currents, and their decoupling.
#![no_std]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod eigensolve;
pub mod experiments;
pub mod observables;
pub mod stats;

pub use error::{Error, Result};
