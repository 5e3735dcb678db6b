//! Every example runs and produces the behaviour it advertises.

#[allow(dead_code)]
#[path = "../examples/anisotropic.rs"]
mod anisotropic;
#[allow(dead_code)]
#[path = "../examples/burgers_isotropic.rs"]
mod burgers_isotropic;
#[allow(dead_code)]
#[path = "../examples/burgers_single.rs"]
mod burgers_single;
#[allow(dead_code)]
#[path = "../examples/convergence_study.rs"]
mod convergence_study;
#[allow(dead_code)]
#[path = "../examples/custom_problem.rs"]
mod custom_problem;
#[allow(dead_code)]
#[path = "../examples/eriksson_johnson.rs"]
mod eriksson_johnson;
#[allow(dead_code)]
#[path = "../examples/heterogeneous.rs"]
mod heterogeneous;
#[allow(dead_code)]
#[path = "../examples/lshape.rs"]
mod lshape;
#[allow(dead_code)]
#[path = "../examples/mesh_io.rs"]
mod mesh_io;

fn decreasing(xs: &[f64]) -> bool {
    xs.first().unwrap() > xs.last().unwrap()
}

#[test]
fn lshape_estimate_decreases() {
    let run = lshape::run_example().unwrap();
    let est: Vec<f64> = run.records.iter().map(|r| r.estimate).collect();
    assert_eq!(est.len(), 8);
    assert!(decreasing(&est));
    assert!(run.records.iter().all(|r| r.partition_defect < 1e-10));
}

#[test]
fn anisotropic_refines_and_converges() {
    let run = anisotropic::run_example().unwrap();
    let dofs = run.dofs();
    assert!(dofs.windows(2).all(|w| w[1] > w[0]));
    let l2: Vec<f64> = run
        .records
        .iter()
        .map(|r| r.errors.unwrap().coarse.l2)
        .collect();
    assert!(decreasing(&l2));
}

#[test]
fn heterogeneous_rates_are_positive() {
    let r = heterogeneous::run_example().unwrap();
    assert!(
        r.coarse_l2 > 1.0 && r.full_l2 > 1.0,
        "{} {}",
        r.coarse_l2,
        r.full_l2
    );
    assert!(r.final_dofs > 0);
}

#[test]
fn eriksson_johnson_full_scale_is_dg() {
    let (run, worst) = eriksson_johnson::run_example().unwrap();
    assert_eq!(run.records.len(), 5);
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn burgers_isotropic_newton_converges() {
    let run = burgers_isotropic::run_example().unwrap();
    assert!(run
        .records
        .iter()
        .all(|r| r.newton_iterations.is_some_and(|n| n <= 30)));
    let vh: Vec<f64> = run
        .records
        .iter()
        .map(|r| r.errors.unwrap().coarse.vh)
        .collect();
    assert!(decreasing(&vh));
}

#[test]
fn burgers_single_stays_bounded() {
    let (_, lo, hi) = burgers_single::run_example().unwrap();
    assert!(lo >= -1.05 && hi <= 1.05, "[{lo}, {hi}]");
}

#[test]
fn custom_problem_is_exact_for_quadratics() {
    let eps = custom_problem::run_example().unwrap();
    assert!(eps[0] > 1e-6);
    assert!(eps[1..].iter().all(|&e| e < 1e-10), "{eps:?}");
}

#[test]
fn mesh_round_trip() {
    let (cells, identical) = mesh_io::run_example().unwrap();
    assert!(identical && cells > 8);
}

#[test]
fn study_writes_artifacts() {
    let files = convergence_study::run_example().unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|f| f.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for p in [1, 2] {
        for ext in ["csv", "json", "svg"] {
            assert!(names.contains(&format!("lshape_p{p}.{ext}")), "{names:?}");
        }
    }
}
