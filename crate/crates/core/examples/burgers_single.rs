//! Burgers flux in x with linear transport in y (κ = 10⁻²). There is no
//! exact solution; the example reports Newton effort and the range of the
//! coarse solution at the Lagrange nodes, which should stay near [−1, 1].

use resmin::adapt::{adaptive_loop, AdaptiveOptions, AdaptiveRun};
use resmin::problems;

/// The run with the minimum and maximum nodal values of `ū` on the last mesh.
pub fn run_example_with(degree: usize, levels: usize) -> resmin::Result<(AdaptiveRun, f64, f64)> {
    let bench = problems::burgers_single(1e-2)?;
    let opts = AdaptiveOptions {
        levels,
        reconstruct: false,
        ..Default::default()
    };
    let run = adaptive_loop(
        &bench.problem,
        degree,
        bench.mesh,
        &opts,
        bench.initial_guess.as_ref(),
    )?;
    let c = &run.solution.coarse;
    let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((run, lo, hi))
}

pub fn run_example() -> resmin::Result<(AdaptiveRun, f64, f64)> {
    run_example_with(3, 4)
}

fn main() -> resmin::Result<()> {
    let (run, lo, hi) = run_example_with(3, 20)?;
    for r in &run.records {
        println!(
            "level {:2}: {:6} dofs, {:2} Newton iterations, estimate {:.3e}",
            r.level,
            r.dofs,
            r.newton_iterations.unwrap(),
            r.estimate
        );
    }
    println!("nodal range of ubar on the final mesh: [{lo:.4}, {hi:.4}]");
    Ok(())
}
