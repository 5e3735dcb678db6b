//! SOLVE → ESTIMATE → MARK → REFINE.

use std::sync::Arc;

use crate::forms::{ProblemDef, ScalarField};
use crate::linalg::norm_inf;
use crate::mesh::Mesh;
use crate::problems::{compute_errors, ErrorReport, DEFAULT_ETA_REF};
use crate::solver::{
    galerkin_defect, reconstruct_linear, reconstruct_nonlinear, solve_dg_reference_nonlinear,
    solve_linear_resmin, solve_nonlinear_resmin, Discretization, NewtonConfig, ScaleSolutions,
};
use crate::{Error, Result};

/// Per-cell indicators `η²_K`: cell terms of `‖ε‖²_{𝕍_h}`, half of every
/// interior face term and the whole boundary face terms on `∂K`.
pub fn localize_estimator(disc: &Discretization, eps: &[f64]) -> Vec<f64> {
    disc.forms.localize(eps)
}

/// Dörfler marking: the shortest prefix of cells sorted by descending `η²_K`
/// (ties by lower index) whose sum reaches `fraction · Σ η²_K`.
/// Returned indices are ascending. Cells with `η²_K = 0` are never marked.
pub fn dorfler_mark(eta2: &[f64], fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::MarkingFraction(fraction));
    }
    let total: f64 = eta2.iter().sum();
    if !(total > 0.0) {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..eta2.len()).collect();
    order.sort_by(|&a, &b| eta2[b].total_cmp(&eta2[a]).then(a.cmp(&b)));
    let target = fraction * total;
    let mut marked = Vec::new();
    let mut acc = 0.0;
    for i in order {
        if acc >= target || eta2[i] <= 0.0 {
            break;
        }
        acc += eta2[i];
        marked.push(i);
    }
    marked.sort_unstable();
    Ok(marked)
}

/// `−slope` of the least-squares line through `(log √dofs, log err)` over the
/// last `window` points.
pub fn convergence_rate(dofs: &[usize], errors: &[f64], window: usize) -> f64 {
    assert_eq!(dofs.len(), errors.len());
    let n = window.min(dofs.len());
    assert!(n >= 2, "need at least two points for a rate");
    let s = dofs.len() - n;
    let xs: Vec<f64> = dofs[s..].iter().map(|&d| 0.5 * (d as f64).ln()).collect();
    let ys: Vec<f64> = errors[s..].iter().map(|e| e.ln()).collect();
    let (mx, my) = (
        xs.iter().sum::<f64>() / n as f64,
        ys.iter().sum::<f64>() / n as f64,
    );
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub levels: usize,
    pub eta_ref: f64,
    pub newton: NewtonConfig,
    /// Compute fine-scale and adjoint reconstructions at every level.
    pub reconstruct: bool,
    /// Compute the reference dG solution at every level.
    pub dg_reference: bool,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            levels: 10,
            eta_ref: DEFAULT_ETA_REF,
            newton: NewtonConfig::default(),
            reconstruct: true,
            dg_reference: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub level: usize,
    pub cells: usize,
    /// `dim 𝕍̄_h + dim 𝕍_h`
    pub dofs: usize,
    /// `‖ε‖_{𝕍_h}`
    pub estimate: f64,
    pub errors: Option<ErrorReport>,
    pub newton_iterations: Option<usize>,
    /// `‖B̄ᵀε‖∞` and `‖ℓ‖∞` (linear problems).
    pub galerkin_defect: Option<(f64, f64)>,
    /// `|Σ η²_K − ‖ε‖²| / ‖ε‖²`
    pub partition_defect: f64,
}

pub struct AdaptiveRun {
    pub records: Vec<ConvergenceRecord>,
    pub discretization: Discretization,
    pub solution: ScaleSolutions,
}

impl AdaptiveRun {
    pub fn dofs(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.dofs).collect()
    }

    /// Rate over the last `window` levels of an error series picked from the records.
    pub fn rate(
        &self,
        window: usize,
        pick: impl Fn(&ConvergenceRecord) -> Option<f64>,
    ) -> Option<f64> {
        let vals: Option<Vec<f64>> = self.records.iter().map(&pick).collect();
        vals.map(|v| convergence_rate(&self.dofs(), &v, window))
    }
}

/// Runs the adaptive loop; see [`adaptive_loop_with`].
pub fn adaptive_loop(
    problem: &ProblemDef,
    degree: usize,
    mesh: Mesh,
    options: &AdaptiveOptions,
    initial_guess: Option<&ScalarField>,
) -> Result<AdaptiveRun> {
    adaptive_loop_with(problem, degree, mesh, options, initial_guess, |_, _, _| {
        Ok(())
    })
}

/// Runs `options.levels` adaptive levels and calls `inspect(level, disc, sol)`
/// after each solve. Nonlinear levels start Newton from `initial_guess` on the
/// first mesh and from the prolongated coarse solution afterwards. The loop
/// stops early if the estimator vanishes.
pub fn adaptive_loop_with(
    problem: &ProblemDef,
    degree: usize,
    mesh: Mesh,
    options: &AdaptiveOptions,
    initial_guess: Option<&ScalarField>,
    mut inspect: impl FnMut(usize, &Discretization, &ScaleSolutions) -> Result<()>,
) -> Result<AdaptiveRun> {
    if options.levels == 0 {
        return Err(Error::Config("levels must be at least 1".into()));
    }
    if !(options.eta_ref > 0.0 && options.eta_ref <= 1.0) {
        return Err(Error::MarkingFraction(options.eta_ref));
    }
    let mut mesh = Arc::new(mesh);
    let mut records = Vec::with_capacity(options.levels);
    let mut previous: Option<(Discretization, ScaleSolutions)> = None;
    for level in 0..options.levels {
        let mut step = || -> Result<(Discretization, ScaleSolutions, ConvergenceRecord)> {
            let disc = Discretization::new(mesh.clone(), problem, degree)?;
            let sol = if problem.is_nonlinear() {
                let start = match &previous {
                    Some((pd, ps)) => disc
                        .conforming
                        .prolongate_from(&pd.conforming, &ps.coarse)?,
                    None => match initial_guess {
                        Some(g) => disc.conforming.interpolate(|x| g(x))?,
                        None => vec![0.0; disc.conforming.ndofs()],
                    },
                };
                let (mut sol, _) = solve_nonlinear_resmin(&disc, &start, &options.newton)?;
                if options.reconstruct {
                    reconstruct_nonlinear(&disc, &mut sol)?;
                }
                if options.dg_reference {
                    let init = sol
                        .full_scale()
                        .unwrap_or_else(|| sol.coarse_broken.clone());
                    sol.dg = Some(solve_dg_reference_nonlinear(&disc, &init, &options.newton)?.0);
                }
                sol
            } else {
                let mut sol = solve_linear_resmin(&disc)?;
                if options.reconstruct || options.dg_reference {
                    reconstruct_linear(&disc, &mut sol, options.dg_reference)?;
                }
                sol
            };
            let estimate = disc.vh_norm(&sol.eps);
            let eta2 = localize_estimator(&disc, &sol.eps);
            let total: f64 = eta2.iter().sum();
            let e2 = estimate * estimate;
            let partition_defect = if e2 > 0.0 {
                (total - e2).abs() / e2
            } else {
                total.abs()
            };
            let galerkin = (!problem.is_nonlinear()).then(|| {
                (
                    galerkin_defect(disc.forms.linear_operator(), &disc.embedding, &sol.eps),
                    norm_inf(&disc.forms.rhs()),
                )
            });
            let errors = match problem.exact {
                Some(_) => Some(compute_errors(&disc, &sol)?),
                None => None,
            };
            let record = ConvergenceRecord {
                level,
                cells: mesh.num_cells(),
                dofs: disc.total_dofs(),
                estimate,
                errors,
                newton_iterations: sol.newton_iterations,
                galerkin_defect: galerkin,
                partition_defect,
            };
            inspect(level, &disc, &sol)?;
            Ok((disc, sol, record))
        };
        let (disc, sol, record) = step().map_err(|e| e.at_level(level))?;
        records.push(record);
        let last = level + 1 == options.levels;
        let marked = if last {
            Vec::new()
        } else {
            dorfler_mark(&localize_estimator(&disc, &sol.eps), options.eta_ref)?
        };
        if !last && !marked.is_empty() {
            mesh = Arc::new(mesh.refine(&marked));
        }
        let stop = last || marked.is_empty();
        previous = Some((disc, sol));
        if stop {
            break;
        }
    }
    let (discretization, solution) = previous.expect("at least one level");
    Ok(AdaptiveRun {
        records,
        discretization,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generators;
    use crate::problems;

    #[test]
    fn marking_examples() {
        assert_eq!(
            dorfler_mark(&[9.0, 4.0, 1.0, 1.0, 1.0], 0.25).unwrap(),
            vec![0]
        );
        assert_eq!(
            dorfler_mark(&[9.0, 4.0, 1.0, 1.0, 1.0], 0.6).unwrap(),
            vec![0, 1]
        );
        assert_eq!(
            dorfler_mark(&[1.0, 0.0, 2.0, 3.0], 1.0).unwrap(),
            vec![0, 2, 3]
        );
        assert!(dorfler_mark(&[0.0; 4], 0.5).unwrap().is_empty());
        assert_eq!(dorfler_mark(&[1.0; 4], 0.5).unwrap(), vec![0, 1]);
        for bad in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                dorfler_mark(&[1.0], bad),
                Err(Error::MarkingFraction(_))
            ));
        }
    }

    #[test]
    fn rate_of_power_law() {
        let dofs = [100, 400, 1600, 6400, 25600];
        let errs: Vec<f64> = dofs
            .iter()
            .map(|&d| 3.0 * (d as f64).sqrt().powf(-1.5))
            .collect();
        assert!((convergence_rate(&dofs, &errs, 5) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn single_level_does_not_refine() {
        let b = problems::lshape().unwrap();
        let opts = AdaptiveOptions {
            levels: 1,
            ..Default::default()
        };
        let run = adaptive_loop(&b.problem, 1, b.mesh.clone(), &opts, None).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.discretization.mesh().num_cells(), b.mesh.num_cells());
    }

    #[test]
    fn lshape_levels() {
        let b = problems::lshape().unwrap();
        let opts = AdaptiveOptions {
            levels: 6,
            dg_reference: true,
            ..Default::default()
        };
        let run = adaptive_loop(&b.problem, 1, b.mesh.clone(), &opts, None).unwrap();
        assert_eq!(run.records.len(), 6);
        for w in run.records.windows(2) {
            assert!(w[1].dofs > w[0].dofs);
        }
        for r in &run.records {
            assert!(r.partition_defect < 1e-12);
            let (g, l) = r.galerkin_defect.unwrap();
            assert!(g <= 1e-9 * l);
            let e = r.errors.unwrap();
            assert!(e.full.is_some() && e.adjoint.is_some() && e.dg.is_some());
        }
    }

    #[test]
    fn full_marking_is_uniform_for_uniform_indicators() {
        let m = generators::unit_square(2).unwrap();
        let all: Vec<usize> = dorfler_mark(&vec![1.0; m.num_cells()], 1.0).unwrap();
        assert_eq!(m.refine(&all).num_cells(), m.refine_uniform().num_cells());
    }

    #[test]
    fn errors_carry_level() {
        let b = problems::lshape().unwrap();
        let opts = AdaptiveOptions {
            levels: 3,
            ..Default::default()
        };
        let err = adaptive_loop_with(&b.problem, 1, b.mesh.clone(), &opts, None, |lvl, _, _| {
            if lvl == 1 {
                Err(Error::Singular("injected".into()))
            } else {
                Ok(())
            }
        })
        .err()
        .unwrap();
        assert!(matches!(err, Error::AtLevel { level: 1, .. }));
    }
}
