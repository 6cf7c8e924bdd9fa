//! Discretized operator variants, cutoff functions, and the decoupling remainder K(z).

mod assemble;
mod cutoffs;
mod grid;
mod kappa;

pub use assemble::{assemble, assemble_on, from_potential, AssembledOperator, Variant};
pub use cutoffs::{build_cutoffs, CutoffSystem, Strip};
pub use grid::{Grid, XBoundary};
pub use kappa::{assemble_kappa, gaussian_vector, kappa_from_ops, strip_variant, KappaOperator, NormEstimate};
