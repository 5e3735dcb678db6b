//! Lagrange finite-element spaces on triangles.

pub mod quadrature;
pub mod reference;
mod space;

pub use quadrature::{quadrature_rule, Entity, Quadrature};
pub use reference::{eval_basis, LagrangeElement, NodeKind, Tabulation};
pub use space::{CgEmbedding, Continuity, FunctionSpace};
