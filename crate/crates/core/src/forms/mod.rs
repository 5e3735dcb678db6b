//! Discrete forms: SWIP diffusion, upwind advection, the Gram matrix of the
//! broken-space norm, right-hand sides, and the nonlinear Lax-Friedrichs form
//! with its exact Gâteaux derivative.

mod assembler;
mod coefficients;
mod flux;
mod problem;

pub use assembler::{DgAssembler, ErrorNorms, FaceKind};
pub use coefficients::{diffusion_weights, normal_diffusivity, penalty_eta_e, Tensor};
pub use flux::{lax_friedrichs_flux, FaceState, NumericalFlux};
pub use problem::{
    BoundaryCondition, DiffusionNormTerm, ExactSolution, Flux, NormKind, ProblemDef, QuadraticFlux,
    ScalarField, TensorField, VectorField,
};
