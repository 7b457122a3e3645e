//! Numerical core for distributed-order fractional optimal control.
//!
//! The library builds up in layers:
//!
//! 1. [`special_functions`] — gamma and Mittag-Leffler evaluations.
//! 2. [`grid`] / [`distribution`] — uniform time grids, sampled
//!    trajectories, and quadrature-discretized order distributions ψ(α)
//!    ("do_" in operator names is short for distributed-order).
//! 3. [`operators`] — single-order and distributed-order fractional
//!    integrals and derivatives on sampled data, plus the residual checks
//!    relating them.
//! 4. [`solvers`] — marching solvers for the forward state equation and the
//!    terminal-value adjoint equation.
//! 5. [`pmp`] — the optimal-control layer: Hamiltonian maximization,
//!    forward–backward sweep, needle-perturbation optimality checks, and
//!    first-order variational trajectories.

pub mod config;
pub mod distribution;
pub mod error;
pub mod grid;
pub mod operators;
pub mod pmp;
pub mod solvers;
pub mod special_functions;

pub use config::SolverConfig;
pub use distribution::{
    build_bump_distribution, build_distribution, build_distribution_on, gauss_legendre,
    OrderDistribution,
};
pub use error::{Error, Result};
pub use grid::{TimeGrid, Trajectory};
pub use special_functions::{gamma_fn, ln_gamma_signed, mittag_leffler, MLParams};
