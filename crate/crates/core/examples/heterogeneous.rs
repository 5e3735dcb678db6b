//! Piecewise-constant anisotropic diffusion with a discontinuity at x = 0.5.
//! Compares L2 convergence of the coarse solution with the full-scale
//! reconstruction for an even polynomial degree.

use resmin::adapt::{adaptive_loop, AdaptiveOptions};
use resmin::problems;

/// L2 rates of `ū` and `Eū + ũ` over the final levels.
pub struct Rates {
    pub coarse_l2: f64,
    pub full_l2: f64,
    pub final_dofs: usize,
}

pub fn run_example_with(degree: usize, levels: usize) -> resmin::Result<Rates> {
    let bench = problems::heterogeneous()?;
    let opts = AdaptiveOptions {
        levels,
        ..Default::default()
    };
    let run = adaptive_loop(&bench.problem, degree, bench.mesh, &opts, None)?;
    let window = levels.min(5);
    Ok(Rates {
        coarse_l2: run.rate(window, |r| r.errors.map(|e| e.coarse.l2)).unwrap(),
        full_l2: run
            .rate(window, |r| r.errors.and_then(|e| e.full).map(|e| e.l2))
            .unwrap(),
        final_dofs: *run.dofs().last().unwrap(),
    })
}

pub fn run_example() -> resmin::Result<Rates> {
    run_example_with(2, 6)
}

fn main() -> resmin::Result<()> {
    for p in [1, 2, 3] {
        let r = run_example_with(p, 12)?;
        println!(
            "p = {p}: {:6} dofs, L2 rate coarse {:.2}, full {:.2}",
            r.final_dofs, r.coarse_l2, r.full_l2
        );
    }
    Ok(())
}
