use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::{Error, Point, Result};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> Point + Send + Sync>;
pub type TensorField = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

/// A scalar conservation-law flux 𝑓(u) ∈ ℝ² with its first two derivatives.
pub trait Flux: Send + Sync {
    fn value(&self, u: f64) -> Point;
    fn derivative(&self, u: f64) -> Point;
    fn second_derivative(&self, u: f64) -> Point;
    fn third_derivative(&self, u: f64) -> Point;
}

/// `𝑓(u) = a u²/2 + b u`; covers both Burgers fluxes and linear advection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFlux {
    pub quadratic: Point,
    pub linear: Point,
}

impl QuadraticFlux {
    pub fn linear(beta: Point) -> Self {
        QuadraticFlux {
            quadratic: [0.0, 0.0],
            linear: beta,
        }
    }
}

impl Flux for QuadraticFlux {
    fn value(&self, u: f64) -> Point {
        let h = 0.5 * u * u;
        [
            self.quadratic[0] * h + self.linear[0] * u,
            self.quadratic[1] * h + self.linear[1] * u,
        ]
    }

    fn derivative(&self, u: f64) -> Point {
        [
            self.quadratic[0] * u + self.linear[0],
            self.quadratic[1] * u + self.linear[1],
        ]
    }

    fn second_derivative(&self, _u: f64) -> Point {
        self.quadratic
    }

    fn third_derivative(&self, _u: f64) -> Point {
        [0.0, 0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Advective part of the broken-space norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// `‖w‖² + Σ_F ½|β·n| ‖[[w]]‖² + Σ_K h_K ‖β·∇w‖²`, for linear problems.
    Advective,
    /// `‖w‖² + Σ_F ‖[[w]]‖² + Σ_K h_K ‖∇w‖²`, for nonlinear conservation laws.
    Convective,
}

/// Diffusive volume term of the broken-space norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionNormTerm {
    /// `(κ∇w, κ∇w)`
    Literal,
    /// `(∇w, κ∇w)`
    Energy,
}

#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: VectorField,
}

/// Coefficients, data and boundary conditions of a stationary problem
/// `−∇·(κ∇u) + ∇·𝑓(u) = f` (linear case: `𝑓(u) = βu` with ∇·β = 0).
#[derive(Clone)]
pub struct ProblemDef {
    pub name: String,
    pub kappa: TensorField,
    pub beta: VectorField,
    pub source: ScalarField,
    /// Present for nonlinear problems.
    pub flux: Option<Arc<dyn Flux>>,
    pub dirichlet: ScalarField,
    pub neumann: ScalarField,
    pub boundary: BTreeMap<String, BoundaryCondition>,
    pub exact: Option<ExactSolution>,
    pub norm: NormKind,
    pub diffusion_norm: DiffusionNormTerm,
}

impl fmt::Debug for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDef")
            .field("name", &self.name)
            .field("nonlinear", &self.flux.is_some())
            .field("boundary", &self.boundary)
            .field("exact", &self.exact.is_some())
            .field("norm", &self.norm)
            .field("diffusion_norm", &self.diffusion_norm)
            .finish()
    }
}

impl ProblemDef {
    /// Pure diffusion with κ = I, no data, and every listed tag Dirichlet.
    pub fn new(name: impl Into<String>) -> Self {
        ProblemDef {
            name: name.into(),
            kappa: Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]]),
            beta: Arc::new(|_| [0.0, 0.0]),
            source: Arc::new(|_| 0.0),
            flux: None,
            dirichlet: Arc::new(|_| 0.0),
            neumann: Arc::new(|_| 0.0),
            boundary: BTreeMap::new(),
            exact: None,
            norm: NormKind::Advective,
            diffusion_norm: DiffusionNormTerm::Literal,
        }
    }

    pub fn with_kappa(
        mut self,
        k: impl Fn(Point) -> [[f64; 2]; 2] + Send + Sync + 'static,
    ) -> Self {
        self.kappa = Arc::new(k);
        self
    }

    pub fn with_scalar_kappa(self, k: f64) -> Self {
        self.with_kappa(move |_| [[k, 0.0], [0.0, k]])
    }

    pub fn with_beta(mut self, b: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        self.beta = Arc::new(b);
        self
    }

    pub fn with_constant_beta(self, b: Point) -> Self {
        self.with_beta(move |_| b)
    }

    pub fn with_source(mut self, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Arc::new(f);
        self
    }

    /// Makes the problem nonlinear and switches to the convective norm.
    pub fn with_flux(mut self, flux: impl Flux + 'static) -> Self {
        self.flux = Some(Arc::new(flux));
        self.norm = NormKind::Convective;
        self
    }

    pub fn with_dirichlet(mut self, g: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.dirichlet = Arc::new(g);
        self
    }

    pub fn with_neumann(mut self, h: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.neumann = Arc::new(h);
        self
    }

    pub fn with_condition(mut self, tag: impl Into<String>, bc: BoundaryCondition) -> Self {
        self.boundary.insert(tag.into(), bc);
        self
    }

    /// Sets the exact solution and uses it as Dirichlet data.
    pub fn with_exact(
        mut self,
        u: impl Fn(Point) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        let u: ScalarField = Arc::new(u);
        self.dirichlet = u.clone();
        self.exact = Some(ExactSolution {
            value: u,
            gradient: Arc::new(grad),
        });
        self
    }

    pub fn with_norm(mut self, norm: NormKind) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_diffusion_norm(mut self, term: DiffusionNormTerm) -> Self {
        self.diffusion_norm = term;
        self
    }

    pub fn is_nonlinear(&self) -> bool {
        self.flux.is_some()
    }

    pub fn condition(&self, tag: &str) -> Result<BoundaryCondition> {
        self.boundary.get(tag).copied().ok_or_else(|| {
            Error::Config(format!(
                "boundary tag '{tag}' has no condition in problem '{}'",
                self.name
            ))
        })
    }
}
