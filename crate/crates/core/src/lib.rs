//! Adaptive stabilized finite elements via residual minimization.
//!
//! A continuous (conforming) coarse-scale solution is obtained by minimizing
//! the residual of a discontinuous Galerkin discretization in the dual of a
//! broken-space norm. The minimization is posed as a symmetric saddle-point
//! problem whose first unknown, the residual representative, doubles as an
//! a-posteriori error estimate that drives adaptive refinement. From the same
//! representative we reconstruct fine-scale and adjoint multiscale corrections.
//!
//! Linear advection–diffusion problems (SWIP diffusion + upwind advection) and
//! nonlinear scalar conservation laws (Lax-Friedrichs flux, damped Newton) are
//! supported on conforming triangulations refined by newest-vertex bisection.
//!
//! The main entry points are [`adapt::adaptive_loop`] and the benchmark
//! registry in [`problems`]; see the crate's `examples/` directory.

pub mod adapt;
pub mod cli;
pub mod error;
pub mod fem;
pub mod forms;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};

/// A point (or vector) in the plane.
pub type Point = [f64; 2];
