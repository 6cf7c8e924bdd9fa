//! Velocities, strip masses, the single-wall velocity bound and free kernel decay.
mod edge;
mod kernel;

pub use edge::*;
pub use kernel::*;
