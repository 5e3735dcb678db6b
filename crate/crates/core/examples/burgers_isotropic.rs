//! Viscous Burgers equation with an interior shock (κ = 10⁻³), solved by
//! damped Newton on the nonlinear saddle-point problem at every level.

use resmin::adapt::{adaptive_loop, AdaptiveOptions, AdaptiveRun};
use resmin::problems;

pub fn run_example_with(kappa: f64, degree: usize, levels: usize) -> resmin::Result<AdaptiveRun> {
    let bench = problems::burgers_isotropic(kappa)?;
    let opts = AdaptiveOptions {
        levels,
        ..Default::default()
    };
    adaptive_loop(
        &bench.problem,
        degree,
        bench.mesh,
        &opts,
        bench.initial_guess.as_ref(),
    )
}

pub fn run_example() -> resmin::Result<AdaptiveRun> {
    run_example_with(1e-2, 2, 4)
}

fn main() -> resmin::Result<()> {
    let run = run_example_with(1e-3, 2, 15)?;
    println!("level     dofs  newton   estimate  |u-ubar|_V   |u-u|_V");
    for r in &run.records {
        let e = r.errors.unwrap();
        println!(
            "{:5} {:8} {:7} {:10.3e} {:11.3e} {:9.3e}",
            r.level,
            r.dofs,
            r.newton_iterations.unwrap(),
            r.estimate,
            e.coarse.vh,
            e.full.unwrap().vh
        );
    }
    println!(
        "V_h rate of ubar over the last 5 levels: {:.2}",
        run.rate(5, |r| r.errors.map(|e| e.coarse.vh)).unwrap()
    );
    Ok(())
}
