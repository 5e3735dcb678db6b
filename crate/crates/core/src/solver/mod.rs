//! Coarse-scale residual minimization and multiscale reconstructions.
//!
//! The coarse solution ū lives in the conforming space 𝕍̄_h and is obtained
//! from the saddle-point system `[[G, B̄], [B̄ᵀ, 0]] [ε; ū] = [ℓ; 0]` where
//! `B̄ = B E`. The residual representative ε then drives
//!
//! * the fine scale: `B ũ = G ε`, with `Eū + ũ` equal to the dG solution;
//! * the adjoint fine scale: `B ǔ = G ε + Bᵀ ε`.
//!
//! Nonlinear problems replace `B` by the Jacobian of the Lax-Friedrichs form
//! at the current coarse state and solve the saddle system by damped Newton.

mod newton;

use std::sync::Arc;

use crate::fem::{CgEmbedding, FunctionSpace};
use crate::forms::{DgAssembler, ProblemDef};
use crate::linalg::{dot, norm_inf, solve_saddle, CsrMatrix, Factorization, SaddleSystem};
use crate::mesh::Mesh;
use crate::Result;

pub use newton::{
    reconstruct_adjoint_nonlinear, reconstruct_fine_nonlinear, reconstruct_nonlinear,
    solve_dg_reference_nonlinear, solve_nonlinear_resmin, NewtonConfig, NewtonReport,
};

/// Relative accuracy required from the reconstruction and reference solves.
pub const SOLVE_TOLERANCE: f64 = 1e-9;

/// Broken and conforming spaces on one mesh, the embedding between them and
/// the form assembler.
pub struct Discretization {
    pub broken: FunctionSpace,
    pub conforming: FunctionSpace,
    pub embedding: CgEmbedding,
    pub forms: DgAssembler,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>, problem: &ProblemDef, degree: usize) -> Result<Self> {
        let broken = FunctionSpace::broken(mesh.clone(), degree)?;
        let conforming = FunctionSpace::conforming(mesh, degree)?;
        let embedding = CgEmbedding::new(&conforming, &broken)?;
        let forms = DgAssembler::new(&broken, problem)?;
        Ok(Discretization {
            broken,
            conforming,
            embedding,
            forms,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.broken.mesh()
    }

    pub fn degree(&self) -> usize {
        self.broken.degree()
    }

    /// `dim 𝕍̄_h + dim 𝕍_h`
    pub fn total_dofs(&self) -> usize {
        self.broken.ndofs() + self.conforming.ndofs()
    }

    /// `√(wᵀ G w)`
    pub fn vh_norm(&self, w: &[f64]) -> f64 {
        dot(w, &self.forms.gram().mul_vec(w)).max(0.0).sqrt()
    }
}

/// Coefficient vectors produced on one mesh.
#[derive(Debug, Clone, Default)]
pub struct ScaleSolutions {
    /// Residual representative ε (broken).
    pub eps: Vec<f64>,
    /// Coarse solution ū (conforming coefficients).
    pub coarse: Vec<f64>,
    /// `E ū` (broken coefficients).
    pub coarse_broken: Vec<f64>,
    /// Fine scale ũ (or δũ for nonlinear problems).
    pub fine: Option<Vec<f64>>,
    /// Adjoint fine scale ǔ (or δǔ).
    pub adjoint: Option<Vec<f64>>,
    /// Reference dG solution θ.
    pub dg: Option<Vec<f64>>,
    /// Newton iterations of the saddle solve (nonlinear problems).
    pub newton_iterations: Option<usize>,
}

impl ScaleSolutions {
    /// `u = Eū + ũ`
    pub fn full_scale(&self) -> Option<Vec<f64>> {
        self.fine.as_ref().map(|f| {
            self.coarse_broken
                .iter()
                .zip(f)
                .map(|(a, b)| a + b)
                .collect()
        })
    }

    /// `φ = Eū + ǔ`
    pub fn adjoint_reconstruction(&self) -> Option<Vec<f64>> {
        self.adjoint.as_ref().map(|f| {
            self.coarse_broken
                .iter()
                .zip(f)
                .map(|(a, b)| a + b)
                .collect()
        })
    }
}

/// `B̄ = B E`
pub fn coarse_operator(b: &CsrMatrix, e: &CgEmbedding) -> CsrMatrix {
    e.right_multiply(b)
}

/// Solves the linear saddle-point problem for `(ε, ū)`.
pub fn solve_linear_resmin(disc: &Discretization) -> Result<ScaleSolutions> {
    let b = disc.forms.linear_operator();
    let sys = SaddleSystem::new(
        disc.forms.gram().clone(),
        coarse_operator(b, &disc.embedding),
        disc.forms.rhs(),
    );
    let (eps, coarse) = solve_saddle(&sys)?;
    let coarse_broken = disc.embedding.apply(&coarse);
    Ok(ScaleSolutions {
        eps,
        coarse,
        coarse_broken,
        ..Default::default()
    })
}

/// `max_w̄ |b_h(ε, w̄)| = ‖B̄ᵀ ε‖∞`
pub fn galerkin_defect(b: &CsrMatrix, e: &CgEmbedding, eps: &[f64]) -> f64 {
    norm_inf(&e.apply_transpose(&b.transpose_mul_vec(eps)))
}

/// Fine scale: `B ũ = G ε`.
pub fn reconstruct_fine(g: &CsrMatrix, b: &CsrMatrix, eps: &[f64]) -> Result<Vec<f64>> {
    Factorization::lu(b)?.solve_checked(&g.mul_vec(eps), SOLVE_TOLERANCE)
}

/// Adjoint fine scale: `B ǔ = G ε + Bᵀ ε`.
pub fn reconstruct_adjoint(g: &CsrMatrix, b: &CsrMatrix, eps: &[f64]) -> Result<Vec<f64>> {
    Factorization::lu(b)?.solve_checked(&adjoint_rhs(g, b, eps), SOLVE_TOLERANCE)
}

fn adjoint_rhs(g: &CsrMatrix, b: &CsrMatrix, eps: &[f64]) -> Vec<f64> {
    let ge = g.mul_vec(eps);
    let bte = b.transpose_mul_vec(eps);
    ge.iter().zip(&bte).map(|(a, c)| a + c).collect()
}

/// Reference dG solution: `B θ = ℓ`.
pub fn solve_dg_reference(b: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    Factorization::lu(b)?.solve_checked(rhs, SOLVE_TOLERANCE)
}

/// Fine, adjoint and (optionally) reference dG solutions of a linear problem,
/// sharing one factorization of `B`.
pub fn reconstruct_linear(
    disc: &Discretization,
    sol: &mut ScaleSolutions,
    with_dg: bool,
) -> Result<()> {
    let b = disc.forms.linear_operator();
    let g = disc.forms.gram();
    let lu = Factorization::lu(b)?;
    sol.fine = Some(lu.solve_checked(&g.mul_vec(&sol.eps), SOLVE_TOLERANCE)?);
    sol.adjoint = Some(lu.solve_checked(&adjoint_rhs(g, b, &sol.eps), SOLVE_TOLERANCE)?);
    if with_dg {
        sol.dg = Some(lu.solve_checked(&disc.forms.rhs(), SOLVE_TOLERANCE)?);
    }
    Ok(())
}
