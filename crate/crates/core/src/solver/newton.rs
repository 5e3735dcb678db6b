use super::{Discretization, ScaleSolutions, SOLVE_TOLERANCE};
use crate::linalg::{dot, norm2, solve_saddle, CsrMatrix, Factorization, SaddleSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonConfig {
    /// Stop once an undamped increment satisfies `‖δū‖_{V_h} < tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Smallest step length tried by the backtracking line searches.
    pub min_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tolerance: 1e-6,
            max_iterations: 50,
            min_step: 1.0 / 1024.0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    /// `‖δū‖_{V_h}` per iteration.
    pub increments: Vec<f64>,
    /// Step length of every accepted step.
    pub step_lengths: Vec<f64>,
    /// `‖ε‖_{V_h}` of the initial guess and of every accepted iterate.
    pub residual_norms: Vec<f64>,
}

/// A coarse iterate with its consistent residual representative
/// `ε = −G⁻¹ r(Eū)` and merit `½‖ε‖²_{V_h}`.
struct Iterate {
    coarse: Vec<f64>,
    broken: Vec<f64>,
    eps: Vec<f64>,
    merit: f64,
}

impl Iterate {
    fn new(disc: &Discretization, gram: &Factorization, coarse: Vec<f64>) -> Result<Self> {
        let broken = disc.embedding.apply(&coarse);
        let r = disc.forms.nonlinear_residual(&broken)?;
        let eps = gram.solve_refined(&negate(&r))?;
        let merit = -0.5 * dot(&eps, &r);
        if !merit.is_finite() {
            return Err(Error::NonFiniteResidual);
        }
        Ok(Iterate {
            coarse,
            broken,
            eps,
            merit,
        })
    }
}

/// `Eᵀ H E` with `H = Σᵢ εᵢ ∂²rᵢ/∂u²` at `Eū`: the ū-derivative of `J̄ᵀε`.
fn curvature(disc: &Discretization, it: &Iterate) -> Result<CsrMatrix> {
    let h = disc.forms.nonlinear_hessian(&it.broken, &it.eps)?;
    let he = disc.embedding.right_multiply(&h);
    Ok(disc.embedding.right_multiply(&he.transpose()))
}

fn step(x: &[f64], k: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + k * b).collect()
}

fn negate(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

const MAX_EXTENSION: f64 = 8.0;

/// Damped Newton iteration for the nonlinear saddle-point problem
///
/// `(ε, v)_{V_h} + n_h(v; ū) = ℓ_h(v)`, `n_h′(ū)[ε, w̄] = 0`,
///
/// starting from the conforming coefficients `initial`.
///
/// The first equation is kept exact, so `ε = ε(ū)` and the problem is the
/// minimization of `Φ(ū) = ½‖ε(ū)‖²_{V_h}`. Each iteration solves
///
/// `[[G, J̄], [J̄ᵀ, C]] [δε; δū] = [0; −J̄ᵀε]`
///
/// twice: with `C = 0` (Gauss-Newton) and with `C = H̄`, the ū-derivative of
/// `J̄ᵀε` (exact Newton). The LF dissipation makes `Φ` only piecewise smooth,
/// so neither model is reliable on its own. Of the two full steps the one
/// with the lower `Φ` is taken and lengthened while `Φ` keeps dropping; if
/// neither decreases `Φ`, the Gauss-Newton direction is halved until it does. Iteration stops once
/// `‖Eδū‖_{V_h} < tolerance`.
pub fn solve_nonlinear_resmin(
    disc: &Discretization,
    initial: &[f64],
    config: &NewtonConfig,
) -> Result<(ScaleSolutions, NewtonReport)> {
    assert_eq!(initial.len(), disc.conforming.ndofs());
    let g = disc.forms.gram();
    let gram = Factorization::cholesky(g)?;
    let mut state = Iterate::new(disc, &gram, initial.to_vec())?;
    let mut report = NewtonReport {
        residual_norms: vec![(2.0 * state.merit).sqrt()],
        ..Default::default()
    };
    for it in 1..=config.max_iterations {
        report.iterations = it;
        let jbar = disc
            .embedding
            .right_multiply(&disc.forms.nonlinear_jacobian(&state.broken)?);
        let f2 = jbar.transpose_mul_vec(&state.eps);
        let solve = |curvature: Option<CsrMatrix>| {
            solve_saddle(&SaddleSystem {
                gram: g.clone(),
                coarse: jbar.clone(),
                rhs: vec![0.0; state.eps.len()],
                constraint_rhs: Some(negate(&f2)),
                curvature,
            })
            .map(|(_, du)| du)
        };
        let gauss = solve(None)?;
        let exact = match solve(Some(curvature(disc, &state)?)) {
            Ok(du) if dot(&f2, &du) > 0.0 => Some(du),
            Ok(_) | Err(Error::Singular(_) | Error::Factorization(_) | Error::Accuracy { .. }) => {
                None
            }
            Err(e) => return Err(e),
        };
        let try_step =
            |du: &[f64], k: f64| match Iterate::new(disc, &gram, step(&state.coarse, k, du)) {
                Ok(c) => Ok(Some(c)),
                Err(Error::NonFiniteResidual) => Ok(None),
                Err(e) => Err(e),
            };
        let mut best: Option<(Iterate, f64, f64, &[f64])> = None;
        for du in exact.iter().chain(std::iter::once(&gauss)) {
            let inc = disc.vh_norm(&disc.embedding.apply(du));
            if let Some(c) = try_step(du, 1.0)? {
                if c.merit < best.as_ref().map_or(state.merit, |b| b.0.merit)
                    || (inc < config.tolerance && best.is_none())
                {
                    best = Some((c, inc, 1.0, du.as_slice()));
                }
            }
        }
        // Away from a minimizer the full step can undershoot a long descent
        // valley; keep doubling while Φ still drops.
        if let Some((c, inc, _, du)) = best.take() {
            let (mut c, mut k) = (c, 1.0);
            if inc >= config.tolerance {
                while k < MAX_EXTENSION {
                    match try_step(du, 2.0 * k)? {
                        Some(e) if e.merit < c.merit => {
                            c = e;
                            k *= 2.0;
                        }
                        _ => break,
                    }
                }
            }
            best = Some((c, k * inc, k, du));
        }
        let (next, inc, k) = match best {
            Some((c, inc, k, _)) => (c, inc, k),
            None => {
                let full = disc.vh_norm(&disc.embedding.apply(&gauss));
                let mut k = 0.5;
                loop {
                    if k < config.min_step {
                        return Err(Error::NewtonStalled { iteration: it });
                    }
                    match try_step(&gauss, k)? {
                        Some(c) if c.merit < state.merit => break (c, k * full, k),
                        _ => k *= 0.5,
                    }
                }
            }
        };
        state = next;
        report.increments.push(inc);
        report.step_lengths.push(k);
        report.residual_norms.push((2.0 * state.merit).sqrt());
        if inc < config.tolerance && k == 1.0 {
            let Iterate {
                eps,
                coarse,
                broken,
                ..
            } = state;
            let sol = ScaleSolutions {
                eps,
                coarse,
                coarse_broken: broken,
                newton_iterations: Some(it),
                ..Default::default()
            };
            return Ok((sol, report));
        }
    }
    Err(Error::NewtonMaxIterations {
        iterations: config.max_iterations,
        increment: report.increments.last().copied().unwrap_or(f64::NAN),
    })
}

/// Fine-scale correction `δũ` from `J(Eū) δũ = G ε`.
pub fn reconstruct_fine_nonlinear(disc: &Discretization, sol: &ScaleSolutions) -> Result<Vec<f64>> {
    let j = disc.forms.nonlinear_jacobian(&sol.coarse_broken)?;
    Factorization::lu(&j)?.solve_checked(&disc.forms.gram().mul_vec(&sol.eps), SOLVE_TOLERANCE)
}

/// Adjoint correction `δǔ` from `J(Eū) δǔ = G ε + J(Eū)ᵀ ε`.
pub fn reconstruct_adjoint_nonlinear(
    disc: &Discretization,
    sol: &ScaleSolutions,
) -> Result<Vec<f64>> {
    let j = disc.forms.nonlinear_jacobian(&sol.coarse_broken)?;
    Factorization::lu(&j)?.solve_checked(&adjoint_rhs(disc, &j, &sol.eps), SOLVE_TOLERANCE)
}

fn adjoint_rhs(disc: &Discretization, j: &CsrMatrix, eps: &[f64]) -> Vec<f64> {
    let ge = disc.forms.gram().mul_vec(eps);
    ge.iter()
        .zip(&j.transpose_mul_vec(eps))
        .map(|(a, b)| a + b)
        .collect()
}

/// Both nonlinear corrections from one factorization of `J(Eū)`.
pub fn reconstruct_nonlinear(disc: &Discretization, sol: &mut ScaleSolutions) -> Result<()> {
    let j = disc.forms.nonlinear_jacobian(&sol.coarse_broken)?;
    let lu = Factorization::lu(&j)?;
    sol.fine = Some(lu.solve_checked(&disc.forms.gram().mul_vec(&sol.eps), SOLVE_TOLERANCE)?);
    sol.adjoint = Some(lu.solve_checked(&adjoint_rhs(disc, &j, &sol.eps), SOLVE_TOLERANCE)?);
    Ok(())
}

/// Damped Newton for the dG equations `r(θ) = 0`, backtracking on `‖r‖₂`.
pub fn solve_dg_reference_nonlinear(
    disc: &Discretization,
    initial: &[f64],
    config: &NewtonConfig,
) -> Result<(Vec<f64>, usize)> {
    let mut theta = initial.to_vec();
    let mut r = disc.forms.nonlinear_residual(&theta)?;
    let mut rn = norm2(&r);
    for it in 1..=config.max_iterations {
        let j = disc.forms.nonlinear_jacobian(&theta)?;
        let d = Factorization::lu(&j)?.solve_refined(&negate(&r))?;
        if disc.vh_norm(&d) < config.tolerance {
            return Ok((step(&theta, 1.0, &d), it));
        }
        let mut k = 1.0;
        loop {
            let cand = step(&theta, k, &d);
            match disc.forms.nonlinear_residual(&cand) {
                Ok(cr) if norm2(&cr) < rn => {
                    theta = cand;
                    rn = norm2(&cr);
                    r = cr;
                    break;
                }
                Ok(_) | Err(Error::NonFiniteResidual) => {}
                Err(e) => return Err(e),
            }
            k *= 0.5;
            if k < config.min_step {
                return Err(Error::NewtonStalled { iteration: it });
            }
        }
    }
    Err(Error::NewtonMaxIterations {
        iterations: config.max_iterations,
        increment: rn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{BoundaryCondition, ProblemDef, QuadraticFlux};
    use crate::linalg::norm_inf;
    use crate::mesh::generators;
    use crate::solver::{reconstruct_linear, solve_linear_resmin};
    use std::sync::Arc;

    fn dirichlet_everywhere(p: ProblemDef) -> ProblemDef {
        ["bottom", "top", "left", "right"]
            .into_iter()
            .fold(p, |p, t| p.with_condition(t, BoundaryCondition::Dirichlet))
    }

    fn disc(p: &ProblemDef, deg: usize) -> Discretization {
        let m = Arc::new(generators::rectangle(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap());
        Discretization::new(m, p, deg).unwrap()
    }

    #[test]
    fn linear_flux_matches_linear_solver() {
        let beta = [1.0, 0.5];
        let p = dirichlet_everywhere(
            ProblemDef::new("lin")
                .with_scalar_kappa(0.05)
                .with_constant_beta(beta)
                .with_flux(QuadraticFlux::linear(beta))
                .with_source(|x| 1.0 + x[0])
                .with_dirichlet(|x| x[1] * x[1]),
        );
        let d = disc(&p, 2);
        let mut lin = solve_linear_resmin(&d).unwrap();
        let (mut nl, rep) = solve_nonlinear_resmin(
            &d,
            &vec![0.0; d.conforming.ndofs()],
            &NewtonConfig::default(),
        )
        .unwrap();
        assert!(rep.iterations <= 3, "{rep:?}");
        let diff: Vec<f64> = lin
            .coarse
            .iter()
            .zip(&nl.coarse)
            .map(|(a, b)| a - b)
            .collect();
        assert!(norm_inf(&diff) < 1e-8 * norm_inf(&lin.coarse));
        reconstruct_linear(&d, &mut lin, false).unwrap();
        reconstruct_nonlinear(&d, &mut nl).unwrap();
        let (a, b) = (lin.full_scale().unwrap(), nl.full_scale().unwrap());
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!(norm_inf(&diff) < 1e-7 * norm_inf(&a));
    }

    #[test]
    fn burgers_stationarity() {
        let p = dirichlet_everywhere(
            ProblemDef::new("burgers")
                .with_scalar_kappa(0.05)
                .with_flux(QuadraticFlux {
                    quadratic: [1.0, 1.0],
                    linear: [0.0, 0.0],
                })
                .with_source(|x| x[0] - x[1])
                .with_dirichlet(|x| 0.5 + 0.2 * x[0]),
        );
        let d = disc(&p, 2);
        let init = d.conforming.interpolate(|_| 0.5).unwrap();
        let (sol, rep) = solve_nonlinear_resmin(&d, &init, &NewtonConfig::default()).unwrap();
        assert!(rep.iterations <= 30);
        assert!(rep
            .residual_norms
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert!(*rep.increments.last().unwrap() < 1e-6);

        let r = d.forms.nonlinear_residual(&sol.coarse_broken).unwrap();
        let f1: Vec<f64> = d
            .forms
            .gram()
            .mul_vec(&sol.eps)
            .iter()
            .zip(&r)
            .map(|(a, b)| a + b)
            .collect();
        let jbar = d
            .embedding
            .right_multiply(&d.forms.nonlinear_jacobian(&sol.coarse_broken).unwrap());
        let f2 = jbar.transpose_mul_vec(&sol.eps);
        assert!(
            norm_inf(&f1) < 1e-8 && norm_inf(&f2) < 1e-8,
            "{} {}",
            norm_inf(&f1),
            norm_inf(&f2)
        );

        let (theta, _) =
            solve_dg_reference_nonlinear(&d, &sol.coarse_broken, &NewtonConfig::default()).unwrap();
        assert!(norm_inf(&d.forms.nonlinear_residual(&theta).unwrap()) < 1e-9);
        let (fine, adj) = (
            reconstruct_fine_nonlinear(&d, &sol).unwrap(),
            reconstruct_adjoint_nonlinear(&d, &sol).unwrap(),
        );
        assert!(fine.iter().chain(&adj).all(|v| v.is_finite()));
    }
}
