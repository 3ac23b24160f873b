mod common;

use common::{burgers, max_error, poisson};
use kronlift::mwr::MwrProblem;
use kronlift::recovery::{extract_candidates, nullspace_search, polish, SearchOptions};
use kronlift::solvers::{newton_solve, pinv_solve, NewtonOptions, DEFAULT_RANK_RTOL};
use kronlift::LiftedSystem;

fn solve_linear(problem: &MwrProblem) -> Vec<f64> {
    let sys = problem.build_collocation_system().unwrap();
    assert!(sys.quadratic().is_none());
    let trace = newton_solve(&sys, &vec![0.0; problem.n_basis], NewtonOptions::default()).unwrap();
    assert!(trace.converged);
    assert!(trace.iterations <= 1);
    trace.last().x.clone()
}

#[test]
fn poisson_spectral_convergence() {
    let errors: Vec<f64> = [4, 6, 8, 10]
        .iter()
        .map(|&n| max_error(&poisson(n), &solve_linear(&poisson(n))))
        .collect();
    println!("poisson max errors: {errors:?}");
    assert!(errors.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn poisson_accuracy() {
    let err8 = max_error(&poisson(8), &solve_linear(&poisson(8)));
    let err10 = max_error(&poisson(10), &solve_linear(&poisson(10)));
    assert!(err8 < 1e-4, "n_basis=8 error {err8:e}");
    assert!(err10 < 1e-6, "n_basis=10 error {err10:e}");
    let problem = poisson(10);
    let mid = problem.evaluate_solution(&solve_linear(&problem), &[0.5]).unwrap()[0];
    assert!((mid - 1.0).abs() < 1e-6);
}

#[test]
fn burgers_lift_then_polish() {
    let problem = burgers(0.1, 10);
    let sys = problem.build_collocation_system().unwrap();
    let lift = LiftedSystem::build(&sys).unwrap();
    let y = pinv_solve(&lift, DEFAULT_RANK_RTOL).unwrap().y;
    let direct = extract_candidates(&lift, &y).unwrap().remove(0);
    let polished = polish(&lift, &direct, NewtonOptions::default()).unwrap();
    assert!(polished.is_root(&sys));
    let mid = problem.evaluate_solution(&polished.x, &[0.5]).unwrap()[0];
    assert!((mid - 1.0).abs() < 1e-4, "u(0.5) = {mid}");
    assert!(max_error(&problem, &polished.x) < 1e-3);
}

#[test]
fn burgers_search_finds_roots() {
    let problem = burgers(0.1, 8);
    let sys = problem.build_collocation_system().unwrap();
    let lift = LiftedSystem::build(&sys).unwrap();
    let cands = nullspace_search(&lift, SearchOptions::default()).unwrap();
    let roots: Vec<_> = cands.iter().filter(|c| c.is_root(&sys)).collect();
    assert!(!roots.is_empty());
    // Discrete nonlinear systems can have spurious roots; at least one
    // matches the manufactured solution.
    assert!(roots.iter().any(|c| max_error(&problem, &c.x) < 1e-2));
}
