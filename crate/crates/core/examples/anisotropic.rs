//! Strongly anisotropic diffusion κ = diag(1, 1/r). The `r` ratio can be
//! given on the command line; the default is 10⁴.

use resmin::adapt::{adaptive_loop, AdaptiveOptions, AdaptiveRun};
use resmin::problems;

pub fn run_example_with(ratio: f64, degree: usize, levels: usize) -> resmin::Result<AdaptiveRun> {
    let bench = problems::anisotropic(ratio)?;
    let opts = AdaptiveOptions {
        levels,
        ..Default::default()
    };
    adaptive_loop(&bench.problem, degree, bench.mesh, &opts, None)
}

pub fn run_example() -> resmin::Result<AdaptiveRun> {
    run_example_with(1e4, 2, 5)
}

fn main() -> resmin::Result<()> {
    let ratio = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1e4);
    let run = run_example_with(ratio, 2, 12)?;
    for r in &run.records {
        let e = r.errors.unwrap();
        println!(
            "level {:2}: {:6} dofs, estimate {:.3e}, |u - ubar|_L2 {:.3e}, |u - u|_L2 {:.3e}",
            r.level,
            r.dofs,
            r.estimate,
            e.coarse.l2,
            e.full.unwrap().l2
        );
    }
    Ok(())
}
