//! Numerical laboratory for the degenerate p-parabolic equation
//! `u_t = (|u_x|^{p-2} u_x)_x`, `p > 2`, in one space dimension.
//!
//! The crate is split into four layers:
//!
//! * [`analytic`]: exact solutions, barriers and the closed-form critical
//!   times of the waiting-time problem.
//! * [`mol`]: a method-of-lines discretization integrated by an adaptive
//!   BDF1/BDF2 stepper with a tridiagonal Newton solve.
//! * [`interface`]: support-edge detection, level-set tracking, waiting-time
//!   detection and edge-exponent fits on a solver trace.
//! * [`experiments`]: declarative scenarios, barrier checks, convergence
//!   studies and the acceptance checks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod interface;
pub mod mol;
pub(crate) mod numeric;

pub use error::{Error, Result};

/// Version string recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
