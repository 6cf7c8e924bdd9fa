//! Interior eigenpairs in a gap window, one-dimensional spectral branches, spectral projectors.

mod branch;
mod projector;
mod window;

pub use branch::{
    branch_point, fiber_state, fiber_velocity, momentum, solve_branch, solve_branch_window, BranchPoint, BranchSpec, Fiber, FiberDomain, FiberModel,
    SpectralBranch,
};
pub use projector::{projector_from_spectrum, spectral_projector, Projector};
pub use window::{count_in, dense_window, polish, solve_window, solve_window_with, EigenPair, Method, SolveOptions, SolverInfo, WindowSpectrum};
