//! Adaptive residual minimization on the L-shaped domain with a corner
//! singularity. Prints the estimate and the errors of the coarse, full-scale
//! and adjoint solutions per level, followed by the observed rates.
//!
//! `cargo run --release --example lshape -- [degree] [levels]`

use resmin::adapt::{adaptive_loop, AdaptiveOptions, AdaptiveRun};
use resmin::problems;

pub fn run_example_with(degree: usize, levels: usize) -> resmin::Result<AdaptiveRun> {
    let bench = problems::lshape()?;
    let opts = AdaptiveOptions {
        levels,
        eta_ref: bench.eta_ref,
        ..Default::default()
    };
    adaptive_loop(&bench.problem, degree, bench.mesh, &opts, None)
}

pub fn run_example() -> resmin::Result<AdaptiveRun> {
    run_example_with(1, 8)
}

fn main() -> resmin::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let degree = args.next().transpose().ok().flatten().unwrap_or(1);
    let levels = args.next().transpose().ok().flatten().unwrap_or(12);
    let run = run_example_with(degree, levels)?;

    println!("level     dofs   estimate   |u-ubar|_V   |u-u|_V    |u-phi|_V");
    for r in &run.records {
        let e = r.errors.expect("exact solution is known");
        println!(
            "{:5} {:8} {:10.3e} {:12.3e} {:10.3e} {:11.3e}",
            r.level,
            r.dofs,
            r.estimate,
            e.coarse.vh,
            e.full.map_or(f64::NAN, |n| n.vh),
            e.adjoint.map_or(f64::NAN, |n| n.vh),
        );
    }
    let window = run.records.len().min(5);
    let coarse = run.rate(window, |r| r.errors.map(|e| e.coarse.vh));
    let est = run.rate(window, |r| Some(r.estimate));
    println!("rate over last {window} levels: coarse {coarse:.2?}, estimate {est:.2?} (optimal {degree})");
    Ok(())
}
