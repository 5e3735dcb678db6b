//! Benchmark registry: coefficients, boundary data, exact solutions and
//! initial meshes, plus error evaluation against the exact solution.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::forms::{
    BoundaryCondition, ErrorNorms, ExactSolution, ProblemDef, QuadraticFlux, ScalarField,
};
use crate::mesh::{generators, Mesh};
use crate::solver::{Discretization, ScaleSolutions};
use crate::{Error, Point, Result};

/// Default Dörfler fraction in 2D.
pub const DEFAULT_ETA_REF: f64 = 0.25;

/// Registered benchmark names. Parameterized ones accept `name:value`.
pub const BENCHMARKS: &[&str] = &[
    "lshape",
    "heterogeneous",
    "anisotropic",
    "eriksson_johnson",
    "burgers_isotropic",
    "burgers_single",
];

#[derive(Clone)]
pub struct Benchmark {
    pub name: String,
    pub problem: ProblemDef,
    pub mesh: Mesh,
    pub eta_ref: f64,
    pub degrees: Vec<usize>,
    /// Initial Newton guess for nonlinear benchmarks.
    pub initial_guess: Option<ScalarField>,
}

impl std::fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("cells", &self.mesh.num_cells())
            .field("eta_ref", &self.eta_ref)
            .field("degrees", &self.degrees)
            .finish()
    }
}

impl Benchmark {
    pub fn is_nonlinear(&self) -> bool {
        self.problem.is_nonlinear()
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.problem.exact.as_ref()
    }
}

fn all_dirichlet(p: ProblemDef, tags: &[&str]) -> ProblemDef {
    tags.iter()
        .fold(p, |p, t| p.with_condition(*t, BoundaryCondition::Dirichlet))
}

const SIDES: [&str; 4] = ["bottom", "right", "top", "left"];

/// Looks up a benchmark by name, with an optional `:parameter` suffix
/// (`anisotropic:1e6`, `burgers_isotropic:1e-2`, `burgers_single:1e-3`).
pub fn by_name(key: &str) -> Result<Benchmark> {
    let (name, arg) = match key.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (key, None),
    };
    let param = |default: f64| -> Result<f64> {
        match arg {
            None => Ok(default),
            Some(a) => a
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::UnknownBenchmark(key.to_string())),
        }
    };
    let no_param = || {
        if arg.is_some() {
            Err(Error::UnknownBenchmark(key.to_string()))
        } else {
            Ok(())
        }
    };
    match name {
        "lshape" => no_param().and_then(|_| lshape()),
        "heterogeneous" => no_param().and_then(|_| heterogeneous()),
        "anisotropic" => anisotropic(param(1e4)?),
        "eriksson_johnson" => no_param().and_then(|_| eriksson_johnson_2d()),
        "burgers_isotropic" => burgers_isotropic(param(1e-3)?),
        "burgers_single" => burgers_single(param(1e-2)?),
        _ => Err(Error::UnknownBenchmark(key.to_string())),
    }
}

/// Laplace on (−1,1)² \ (−1,0]² with `u = r^{2/3} sin(2θ/3)`.
pub fn lshape() -> Result<Benchmark> {
    const ALPHA: f64 = 2.0 / 3.0;
    let u = |x: Point| {
        let r = x[0].hypot(x[1]);
        // +0.0 folds −0.0 so the slit y = 0, x < 0 is seen from above.
        let t = (x[1] + 0.0).atan2(x[0]);
        r.powf(ALPHA) * (ALPHA * t).sin()
    };
    let grad = |x: Point| {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let t = (x[1] + 0.0).atan2(x[0]);
        let s = ALPHA * r.powf(ALPHA - 1.0);
        [s * ((ALPHA - 1.0) * t).sin(), s * ((ALPHA - 1.0) * t).cos()]
    };
    let problem = all_dirichlet(ProblemDef::new("lshape").with_exact(u, grad), &["boundary"]);
    Ok(Benchmark {
        name: "lshape".into(),
        problem,
        mesh: generators::lshape_fan()?,
        eta_ref: DEFAULT_ETA_REF,
        degrees: vec![1, 2, 3, 4],
        initial_guess: None,
    })
}

/// Two-subdomain exponential layer solution, `x`-dependent only.
struct Heterogeneous {
    eps: [f64; 2],
    u_half: f64,
}

impl Heterogeneous {
    fn new(e1: f64, e2: f64) -> Self {
        let (a, b) = ((0.5 / e1).exp(), (0.5 / e2).exp());
        let c = a / (1.0 - a);
        Heterogeneous {
            eps: [e1, e2],
            u_half: c / (c + 1.0 / (1.0 - b)),
        }
    }

    /// `(u, u′)` at abscissa `x`.
    fn eval(&self, x: f64) -> (f64, f64) {
        let h = self.u_half;
        if x <= 0.5 {
            let e = self.eps[0];
            let a = (0.5 / e).exp();
            let ex = (x / e).exp();
            (
                (h - a + (1.0 - h) * ex) / (1.0 - a),
                (1.0 - h) * ex / (e * (1.0 - a)),
            )
        } else {
            let e = self.eps[1];
            let b = (0.5 / e).exp();
            let ex = ((x - 0.5) / e).exp();
            ((-b * h + h * ex) / (1.0 - b), h * ex / (e * (1.0 - b)))
        }
    }
}

/// Advection-diffusion on [0,1]² with κ = diag(εᵢ, 1) on x ≶ ½ and β = (0,1).
///
/// The exact solution depends on `x` only and satisfies `εᵢ u″ = u′`, so the
/// source is `f = −εᵢ u″ = −u′`.
pub fn heterogeneous() -> Result<Benchmark> {
    let h = Arc::new(Heterogeneous::new(0.1, 1.0));
    let (h1, h2, h3) = (h.clone(), h.clone(), h.clone());
    let problem = all_dirichlet(
        ProblemDef::new("heterogeneous")
            .with_kappa(move |x| {
                [
                    [if x[0] < 0.5 { h.eps[0] } else { h.eps[1] }, 0.0],
                    [0.0, 1.0],
                ]
            })
            .with_constant_beta([0.0, 1.0])
            .with_source(move |x| -h1.eval(x[0]).1)
            .with_exact(move |x| h2.eval(x[0]).0, move |x| [h3.eval(x[0]).1, 0.0]),
        &SIDES,
    );
    Ok(Benchmark {
        name: "heterogeneous".into(),
        problem,
        mesh: generators::unit_square(4)?,
        eta_ref: DEFAULT_ETA_REF,
        degrees: vec![1, 2, 3, 4],
        initial_guess: None,
    })
}

/// Anisotropic diffusion κ = diag(1, 1/r_κ) on [−1,1]×[−½,½] with a
/// Gaussian inner-layer solution.
pub fn anisotropic(r_kappa: f64) -> Result<Benchmark> {
    if !(r_kappa > 0.0 && r_kappa.is_finite()) {
        return Err(Error::Config(format!(
            "anisotropy ratio must be positive, got {r_kappa}"
        )));
    }
    const TAU: f64 = 1e-3;
    let rt = r_kappa * TAU;
    let c = 1.0 / (4.0 * PI * rt.sqrt());
    let u = move |x: Point| c * (-(x[0] * x[0] + rt * x[1] * x[1])).exp();
    let grad = move |x: Point| {
        let v = u(x);
        [-2.0 * x[0] * v, -2.0 * rt * x[1] * v]
    };
    let source = move |x: Point| {
        let (xx, yy) = (x[0] * x[0], x[1] * x[1]);
        -((4.0 * xx - 2.0) + 4.0 * r_kappa * TAU * TAU * yy - 2.0 * TAU) * u(x)
    };
    let problem = all_dirichlet(
        ProblemDef::new(format!("anisotropic:{r_kappa:e}"))
            .with_kappa(move |_| [[1.0, 0.0], [0.0, 1.0 / r_kappa]])
            .with_source(source)
            .with_exact(u, grad),
        &SIDES,
    );
    Ok(Benchmark {
        name: format!("anisotropic:{r_kappa:e}"),
        problem,
        mesh: generators::rectangle(-1.0, 1.0, -0.5, 0.5, 4, 4)?,
        eta_ref: DEFAULT_ETA_REF,
        degrees: vec![1, 2, 3, 4],
        initial_guess: None,
    })
}

/// Characteristic roots `r₁,₂ = (1 ± √(1 + 4κ²π²)) / (2κ)`.
pub fn eriksson_johnson_roots(kappa: f64) -> (f64, f64) {
    let s = (1.0 + 4.0 * kappa * kappa * PI * PI).sqrt();
    ((1.0 + s) / (2.0 * kappa), (1.0 - s) / (2.0 * kappa))
}

/// Eriksson-Johnson boundary layer on [0,1]², κ = 10⁻², β = (1,0), f = 0.
pub fn eriksson_johnson_2d() -> Result<Benchmark> {
    const KAPPA: f64 = 1e-2;
    let (r1, r2) = eriksson_johnson_roots(KAPPA);
    let d = (-r1).exp() - (-r2).exp();
    let g = move |x: f64| ((r1 * (x - 1.0)).exp() - (r2 * (x - 1.0)).exp()) / d;
    let dg = move |x: f64| (r1 * (r1 * (x - 1.0)).exp() - r2 * (r2 * (x - 1.0)).exp()) / d;
    let problem = all_dirichlet(
        ProblemDef::new("eriksson_johnson")
            .with_scalar_kappa(KAPPA)
            .with_constant_beta([1.0, 0.0])
            .with_exact(
                move |x| g(x[0]) * (PI * x[1]).sin(),
                move |x| {
                    [
                        dg(x[0]) * (PI * x[1]).sin(),
                        g(x[0]) * PI * (PI * x[1]).cos(),
                    ]
                },
            ),
        &SIDES,
    );
    Ok(Benchmark {
        name: "eriksson_johnson".into(),
        problem,
        mesh: generators::unit_square(4)?,
        eta_ref: DEFAULT_ETA_REF,
        degrees: vec![1, 2, 3, 4],
        initial_guess: None,
    })
}

/// Burgers with `𝑓(u) = b u²/2`, b = (1,1), and the tanh inner layer
/// `u = ½(1 − tanh((2x − y − ¼)/√(5κ)))`.
pub fn burgers_isotropic(kappa: f64) -> Result<Benchmark> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Config(format!(
            "diffusivity must be positive, got {kappa}"
        )));
    }
    let w = (5.0 * kappa).sqrt();
    let s = move |x: Point| (2.0 * x[0] - x[1] - 0.25) / w;
    let u = move |x: Point| 0.5 * (1.0 - s(x).tanh());
    let grad = move |x: Point| {
        let sech2 = 1.0 / s(x).cosh().powi(2);
        [-sech2 / w, 0.5 * sech2 / w]
    };
    let source = move |x: Point| {
        let t = s(x).tanh();
        let sech2 = 1.0 - t * t;
        -u(x) * sech2 / (2.0 * w) - sech2 * t
    };
    let problem = all_dirichlet(
        ProblemDef::new(format!("burgers_isotropic:{kappa:e}"))
            .with_scalar_kappa(kappa)
            .with_flux(QuadraticFlux {
                quadratic: [1.0, 1.0],
                linear: [0.0, 0.0],
            })
            .with_source(source)
            .with_exact(u, grad),
        &SIDES,
    );
    Ok(Benchmark {
        name: format!("burgers_isotropic:{kappa:e}"),
        problem,
        mesh: generators::unit_square(4)?,
        eta_ref: DEFAULT_ETA_REF,
        degrees: vec![1, 2, 3, 4],
        initial_guess: Some(Arc::new(|_| 0.5)),
    })
}

/// Single-component Burgers `𝑓(u) = [u²/2, u]` with `u_D = 1 − 2x` on the
/// bottom, left and right sides and a natural outflow at `y = 1`.
pub fn burgers_single(kappa: f64) -> Result<Benchmark> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Config(format!(
            "diffusivity must be positive, got {kappa}"
        )));
    }
    let problem = all_dirichlet(
        ProblemDef::new(format!("burgers_single:{kappa:e}"))
            .with_scalar_kappa(kappa)
            .with_flux(QuadraticFlux {
                quadratic: [1.0, 0.0],
                linear: [0.0, 1.0],
            })
            .with_dirichlet(|x| 1.0 - 2.0 * x[0]),
        &["bottom", "left", "right"],
    )
    .with_condition("top", BoundaryCondition::Neumann);
    Ok(Benchmark {
        name: format!("burgers_single:{kappa:e}"),
        problem,
        mesh: generators::unit_square(4)?,
        eta_ref: DEFAULT_ETA_REF,
        degrees: vec![3],
        initial_guess: Some(Arc::new(|x| 1.0 - 2.0 * x[0])),
    })
}

/// Errors of every available approximation against the exact solution.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub coarse: ErrorNorms,
    pub full: Option<ErrorNorms>,
    pub adjoint: Option<ErrorNorms>,
    pub dg: Option<ErrorNorms>,
}

pub fn compute_errors(disc: &Discretization, sol: &ScaleSolutions) -> Result<ErrorReport> {
    let exact = disc
        .forms
        .problem()
        .exact
        .as_ref()
        .ok_or(Error::MissingExactSolution)?;
    let norms = |u: &[f64]| disc.forms.error_norms(u, exact);
    Ok(ErrorReport {
        coarse: norms(&sol.coarse_broken),
        full: sol.full_scale().as_deref().map(norms),
        adjoint: sol.adjoint_reconstruction().as_deref().map(norms),
        dg: sol.dg.as_deref().map(norms),
    })
}
