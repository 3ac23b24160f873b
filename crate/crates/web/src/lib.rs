//! Browser bindings for three kronlift demos. Each export takes plain numbers
//! and returns a JSON string; the pure functions underneath are testable on
//! the host.

use std::f64::consts::PI;

use kronlift::mwr::{BasisKind, BcKind, BoundaryCondition, Forcing, LinearOperatorSpec, MwrProblem};
use kronlift::recovery::{
    extract_candidates, nullspace_search, polish, rank_candidates, SearchOptions,
};
use kronlift::solvers::{
    least_squares_family, pinv_solve, svd_analyze, NewtonOptions, SvdReport, DEFAULT_RANK_RTOL,
};
use kronlift::{DenseMatrix, LiftedSystem, PolynomialSystem};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_N: usize = 6;
const MAX_BASIS: usize = 16;

#[derive(Debug, Serialize)]
pub struct Landscape {
    /// Null-space coordinate along the least-squares family.
    pub t: Vec<f64>,
    /// Linear block `x(t)` of the lifted vector.
    pub x: Vec<f64>,
    /// Consistency defect `|y₂(t) − x(t)²| / (1 + |y₂(t)|)`.
    pub defect: Vec<f64>,
    pub roots: Vec<f64>,
    /// Roots the search recovered, with their `t`.
    pub found: Vec<[f64; 2]>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Scalar `g·x² + d·x = b`: the lifted family `y⁺ + N·t` and its defect.
pub fn scalar_landscape(d: f64, g: f64, b: f64, samples: usize) -> Result<Landscape, String> {
    if samples < 2 {
        return Err("need at least two samples".into());
    }
    let one = |v: f64| DenseMatrix::from_rows(&[[v]]).map_err(err);
    let sys = PolynomialSystem::new(one(d)?, Some(one(g)?), None, vec![b]).map_err(err)?;
    let lift = LiftedSystem::build(&sys).map_err(err)?;
    let fam = least_squares_family(&lift, DEFAULT_RANK_RTOL).map_err(err)?;
    if fam.null_basis.cols() != 1 {
        return Err(format!("expected a one-dimensional null space, got {}", fam.null_basis.cols()));
    }
    let (y0, n) = (&fam.particular.y, fam.null_basis.column_vec(0));
    let point = |t: f64| (y0[0] + n[0] * t, y0[1] + n[1] * t);

    let mut found = Vec::new();
    for c in nullspace_search(&lift, SearchOptions::default()).map_err(err)? {
        if c.is_root(&sys) {
            let y = lift.monomial_embedding(&c.x).map_err(err)?;
            let t = (0..2).map(|i| (y[i] - y0[i]) * n[i]).sum::<f64>();
            found.push([c.x[0], t]);
        }
    }

    let span = found.iter().map(|f| f[1].abs()).fold(2.0, f64::max) * 1.5;
    let t: Vec<f64> = (0..samples)
        .map(|i| -span + 2.0 * span * i as f64 / (samples - 1) as f64)
        .collect();
    let (x, defect) = t
        .iter()
        .map(|&t| {
            let (x, q) = point(t);
            (x, (q - x * x).abs() / (1.0 + q.abs()))
        })
        .unzip();

    let mut roots = real_roots(g, d, -b);
    roots.sort_by(f64::total_cmp);
    Ok(Landscape {
        t,
        x,
        defect,
        roots,
        found,
    })
}

/// Real roots of `a·x² + b·x + c`.
fn real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let q = if q == 0.0 { -0.5 * disc.sqrt() } else { q };
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

#[derive(Debug, Serialize)]
pub struct BurgersDemo {
    pub nodes: Vec<f64>,
    pub grid: Vec<f64>,
    pub exact: Vec<f64>,
    /// Polished direct candidate from the minimum-norm lifted solution.
    pub lifted: Vec<f64>,
    pub lifted_residual: f64,
    pub lifted_max_error: f64,
    /// Other roots of the discrete system found by the null-space search.
    pub other_roots: Vec<Vec<f64>>,
    pub svd: SvdReport,
}

fn burgers_problem(nu: f64, n_basis: usize) -> MwrProblem {
    let bc = |at| BoundaryCondition {
        at,
        kind: BcKind::Value,
        value: 0.0,
    };
    let mut p = MwrProblem {
        domain: [0.0, 1.0],
        p: LinearOperatorSpec::identity(),
        r: LinearOperatorSpec::derivative(1, 1.0),
        l: LinearOperatorSpec::derivative(2, -nu),
        f: Forcing::Nodal(vec![]),
        n_basis,
        basis: BasisKind::Chebyshev,
        bc: vec![bc(0.0), bc(1.0)],
    };
    p.f = Forcing::Nodal(
        p.collocation_nodes()
            .iter()
            .map(|x| PI * (PI * x).sin() * (PI * x).cos() + nu * PI * PI * (PI * x).sin())
            .collect(),
    );
    p
}

/// `u·u' − ν·u'' = f` on [0, 1] with `f` manufactured from `u* = sin(πx)`.
pub fn burgers_demo(nu: f64, n_basis: usize) -> Result<BurgersDemo, String> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(format!("viscosity must be > 0, got {nu}"));
    }
    if !(3..=MAX_BASIS).contains(&n_basis) {
        return Err(format!("n_basis must be in 3..={MAX_BASIS}, got {n_basis}"));
    }
    let problem = burgers_problem(nu, n_basis);
    let sys = problem.build_collocation_system().map_err(err)?;
    let lift = LiftedSystem::build(&sys).map_err(err)?;
    let svd = svd_analyze(lift.matrix(), DEFAULT_RANK_RTOL).map_err(err)?;
    let y = pinv_solve(&lift, DEFAULT_RANK_RTOL).map_err(err)?.y;
    let direct = extract_candidates(&lift, &y).map_err(err)?.remove(0);
    let polished = polish(&lift, &direct, NewtonOptions::default()).map_err(err)?;

    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let exact: Vec<f64> = grid.iter().map(|x| (PI * x).sin()).collect();
    let lifted = problem.evaluate_solution(&polished.x, &grid).map_err(err)?;
    let lifted_max_error = lifted
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let opts = SearchOptions {
        starts: 8,
        ..SearchOptions::default()
    };
    let mut other_roots = Vec::new();
    for c in rank_candidates(nullspace_search(&lift, opts).map_err(err)?) {
        let far = kronlift_dist(&c.x, &polished.x) > 1e-6;
        if c.is_root(&sys) && far && other_roots.len() < 3 {
            other_roots.push(problem.evaluate_solution(&c.x, &grid).map_err(err)?);
        }
    }

    Ok(BurgersDemo {
        nodes: problem.collocation_nodes(),
        grid,
        exact,
        lifted,
        lifted_residual: polished.nonlinear_residual,
        lifted_max_error,
        other_roots,
        svd,
    })
}

fn kronlift_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Serialize)]
pub struct Spectrum {
    pub n: usize,
    pub m: usize,
    pub degree: u32,
    pub svd: SvdReport,
}

/// Singular values of the lift of a seeded random system.
pub fn lift_spectrum(n: usize, degree: u32, seed: u64) -> Result<Spectrum, String> {
    if !(1..=MAX_N).contains(&n) {
        return Err(format!("n must be in 1..={MAX_N}, got {n}"));
    }
    let sys = PolynomialSystem::random(n, degree, seed, None).map_err(err)?;
    let lift = LiftedSystem::build(&sys).map_err(err)?;
    let svd = svd_analyze(lift.matrix(), DEFAULT_RANK_RTOL).map_err(err)?;
    Ok(Spectrum {
        n,
        m: lift.m(),
        degree,
        svd,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::json!({ "ok": v }).to_string(),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

#[wasm_bindgen(js_name = scalarLandscape)]
pub fn scalar_landscape_js(d: f64, g: f64, b: f64) -> String {
    to_json(scalar_landscape(d, g, b, 401))
}

#[wasm_bindgen(js_name = burgersDemo)]
pub fn burgers_demo_js(nu: f64, n_basis: u32) -> String {
    to_json(burgers_demo(nu, n_basis as usize))
}

#[wasm_bindgen(js_name = liftSpectrum)]
pub fn lift_spectrum_js(n: u32, degree: u32, seed: u32) -> String {
    to_json(lift_spectrum(n as usize, degree, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_landscape() {
        let l = scalar_landscape(0.0, 1.0, 1.0, 101).unwrap();
        assert_eq!(l.roots, vec![-1.0, 1.0]);
        assert_eq!(l.found.len(), 2);
        for [x, t] in &l.found {
            assert!((x.abs() - 1.0).abs() < 1e-8);
            assert!(t.abs() <= l.t[100]);
        }
        assert!(l.defect.iter().all(|d| *d >= 0.0));
        // The defect vanishes near the roots' null-space coordinates.
        let min = l.defect.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min < 0.05);
    }

    #[test]
    fn landscape_without_real_roots() {
        let l = scalar_landscape(0.0, 1.0, -1.0, 11).unwrap();
        assert!(l.roots.is_empty());
        assert!(l.found.is_empty());
        assert!(l.defect.iter().all(|d| *d > 0.0));
    }

    #[test]
    fn linear_equation_landscape() {
        let l = scalar_landscape(2.0, 0.0, 1.0, 11).unwrap();
        assert_eq!(l.roots, vec![0.5]);
        assert!(l.found.iter().all(|f| (f[0] - 0.5).abs() < 1e-8));
        assert!(scalar_landscape(0.0, 0.0, 1.0, 11).is_err());
        assert!(scalar_landscape(0.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn quadratic_formula() {
        let mut r = real_roots(1.0, -3.0, 2.0);
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![1.0, 2.0]);
        assert_eq!(real_roots(0.0, 2.0, -4.0), vec![2.0]);
        assert!(real_roots(1.0, 0.0, 1.0).is_empty());
    }

    #[test]
    fn burgers_matches_manufactured_solution() {
        let demo = burgers_demo(0.1, 10).unwrap();
        assert!(demo.lifted_max_error < 1e-3, "{}", demo.lifted_max_error);
        assert!(demo.lifted_residual < 1e-8);
        assert_eq!(demo.grid.len(), demo.lifted.len());
        assert!((demo.lifted[50] - 1.0).abs() < 1e-4);
        assert!(burgers_demo(0.0, 10).is_err());
        assert!(burgers_demo(0.1, 40).is_err());
    }

    #[test]
    fn spectrum_shape() {
        let s = lift_spectrum(3, 2, 7).unwrap();
        assert_eq!(s.m, 9);
        assert_eq!(s.svd.singular_values.len(), 3);
        assert_eq!(s.svd.nullity, 6);
        assert!(lift_spectrum(0, 2, 0).is_err());
        assert!(lift_spectrum(3, 4, 0).is_err());
    }

    #[test]
    fn json_envelope() {
        let ok: serde_json::Value = serde_json::from_str(&lift_spectrum_js(2, 3, 1)).unwrap();
        assert_eq!(ok["ok"]["m"], 6);
        let bad: serde_json::Value = serde_json::from_str(&burgers_demo_js(-1.0, 8)).unwrap();
        assert!(bad["error"].as_str().unwrap().contains("viscosity"));
    }
}
