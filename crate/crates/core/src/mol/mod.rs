//! Method-of-lines solver for `u_t = Δ_p u` on a uniform 1D grid.

mod grid;
mod integrate;
mod problem;
mod stencil;
mod stepper;

pub use grid::{build_grid, Grid, MIN_CELLS};
pub use integrate::{
    error_norms, integrate, uniform_snapshots, ErrorNorms, Observer, SolveStats, SolveTrace,
};
pub use problem::{
    sample_initial_data, GridState, IntegratorSettings, ProblemSpec, Profile, Scheme,
};
pub use stencil::{jacobian, jacobian_into, rhs, rhs_into, Tridiagonal};
pub use stepper::{implicit_step, Rejection, StepOutcome, Workspace};
