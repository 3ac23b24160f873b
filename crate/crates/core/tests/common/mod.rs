#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use kronlift::mwr::{BasisKind, BcKind, BoundaryCondition, Forcing, LinearOperatorSpec, MwrProblem};
use kronlift::recovery::{nullspace_search, polish, rank_candidates, SearchOptions};
use kronlift::solvers::{newton_solve, pseudoinverse, NewtonOptions};
use kronlift::{DenseMatrix, LiftedSystem, PolynomialSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn gauss(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_row_major(rows, cols, gauss_vec(rng, rows * cols)).unwrap()
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `M·Mᵀ` with `M` of shape `n × k`; singular whenever `k < n`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let k = rng.random_range(1..=n + 2);
    let m = gauss(rng, n, k);
    let g = m.matmul(&m.transpose()).unwrap();
    // exact symmetry, independent of summation order
    DenseMatrix::from_fn(n, n, |i, j| if i <= j { g[(i, j)] } else { g[(j, i)] })
}

/// Rank-deficient when `rank < min(rows, cols)`.
pub fn random_low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize) -> DenseMatrix {
    gauss(rng, rows, rank).matmul(&gauss(rng, rank, cols)).unwrap()
}

/// Determinant by Leibniz expansion over all permutations.
pub fn leibniz_det(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    permute(&mut perm, 0, &mut |p| {
        let mut inversions = 0;
        for i in 0..n {
            for j in i + 1..n {
                if p[i] > p[j] {
                    inversions += 1;
                }
            }
        }
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * (0..n).map(|i| a[(i, p[i])]).product::<f64>();
    });
    total
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// `D·x + G·(x⊗x) + R·(x⊗x⊗x)` written out index by index.
pub fn apply_loops(sys: &PolynomialSystem, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for (row, o) in out.iter_mut().enumerate() {
        for i in 0..n {
            *o += sys.linear()[(row, i)] * x[i];
        }
        if let Some(g) = sys.quadratic() {
            for i in 0..n {
                for j in 0..n {
                    *o += g[(row, i * n + j)] * x[i] * x[j];
                }
            }
        }
        if let Some(r) = sys.cubic() {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        *o += r[(row, (i * n + j) * n + k)] * x[i] * x[j] * x[k];
                    }
                }
            }
        }
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// The seeded random systems used throughout: degree alternates, `n` cycles
/// through `1..=max_n`.
pub fn seeded_system(seed: u64, max_n: usize) -> PolynomialSystem {
    let n = 1 + (seed as usize) % max_n;
    let degree = if (seed / max_n as u64).is_multiple_of(2) { 2 } else { 3 };
    PolynomialSystem::random(n, degree, seed, None).unwrap()
}

pub struct Recovery {
    pub n: usize,
    pub seed: u64,
    pub root: Vec<f64>,
    pub best_distance: f64,
    pub candidates: usize,
}

impl Recovery {
    pub fn recovered(&self) -> bool {
        self.best_distance <= 1e-6
    }
}

/// Plants a root, runs the null-space search with `starts` starts, polishes
/// every candidate and reports the closest one to the planted root.
pub fn planted_recovery(n: usize, degree: u32, seed: u64, starts: usize) -> Recovery {
    let root = kronlift::cli::seeded_root(n, seed);
    let sys = PolynomialSystem::random(n, degree, seed, Some(&root)).unwrap();
    let lift = LiftedSystem::build(&sys).unwrap();
    let opts = SearchOptions {
        starts,
        seed,
        ..SearchOptions::default()
    };
    let raw = nullspace_search(&lift, opts).unwrap();
    let mut all = raw.clone();
    for c in &raw {
        all.push(polish(&lift, c, NewtonOptions::default()).unwrap());
    }
    let ranked = rank_candidates(all);
    let best_distance = ranked
        .iter()
        .filter(|c| c.is_root(&sys))
        .map(|c| dist(&c.x, &root))
        .fold(f64::INFINITY, f64::min);
    Recovery {
        n,
        seed,
        root,
        best_distance,
        candidates: ranked.len(),
    }
}

/// Largest `e_{k+1}/e_k²` over the last three steps with `e_k ≥ 1e-6`, and
/// the bound `10·‖J(x*)⁻¹‖_F·‖G‖_F` it must stay under.
pub fn newton_ratio(seed: u64, n: usize) -> Option<(f64, f64)> {
    let mut r = rng(seed);
    let root = gauss_vec(&mut r, n);
    let sys = PolynomialSystem::random(n, 2, seed, Some(&root)).unwrap();
    let jinv = pseudoinverse(&sys.eval_jacobian(&root).unwrap(), 0.0).unwrap();
    let bound = 10.0 * jinv.frobenius_norm() * sys.quadratic().unwrap().frobenius_norm();
    let x0: Vec<f64> = root.iter().zip(gauss_vec(&mut r, n)).map(|(a, d)| a + 1e-2 * d).collect();
    let trace = newton_solve(&sys, &x0, NewtonOptions::default()).ok()?;
    if !trace.converged || dist(&trace.last().x, &root) > 1e-8 {
        return None;
    }
    let errs: Vec<f64> = trace.iterates.iter().map(|it| dist(&it.x, &root)).collect();
    let ratios: Vec<f64> = errs
        .windows(2)
        .filter(|w| w[0] >= 1e-6)
        .map(|w| w[1] / (w[0] * w[0]))
        .collect();
    let worst = ratios.iter().rev().take(3).copied().fold(0.0, f64::max);
    Some((worst, bound))
}

pub fn dirichlet_zero() -> Vec<BoundaryCondition> {
    vec![
        BoundaryCondition { at: 0.0, kind: BcKind::Value, value: 0.0 },
        BoundaryCondition { at: 1.0, kind: BcKind::Value, value: 0.0 },
    ]
}

/// `-u'' = π² sin(πx)` on [0, 1] with `u(0) = u(1) = 0`; exact `u = sin(πx)`.
pub fn poisson(n_basis: usize) -> MwrProblem {
    let mut p = MwrProblem {
        domain: [0.0, 1.0],
        p: LinearOperatorSpec::zero(),
        r: LinearOperatorSpec::zero(),
        l: LinearOperatorSpec::derivative(2, -1.0),
        f: Forcing::Nodal(vec![]),
        n_basis,
        basis: BasisKind::Chebyshev,
        bc: dirichlet_zero(),
    };
    p.f = Forcing::Nodal(p.collocation_nodes().iter().map(|x| PI * PI * (PI * x).sin()).collect());
    p
}

/// `u·u' − ν u'' = f` with `f` manufactured from `u = sin(πx)`.
pub fn burgers(nu: f64, n_basis: usize) -> MwrProblem {
    let mut p = MwrProblem {
        domain: [0.0, 1.0],
        p: LinearOperatorSpec::identity(),
        r: LinearOperatorSpec::derivative(1, 1.0),
        l: LinearOperatorSpec::derivative(2, -nu),
        f: Forcing::Nodal(vec![]),
        n_basis,
        basis: BasisKind::Chebyshev,
        bc: dirichlet_zero(),
    };
    p.f = Forcing::Nodal(
        p.collocation_nodes()
            .iter()
            .map(|x| PI * (PI * x).sin() * (PI * x).cos() + nu * PI * PI * (PI * x).sin())
            .collect(),
    );
    p
}

/// Max deviation from `sin(πx)` on a 201-point grid.
pub fn max_error(problem: &MwrProblem, coeffs: &[f64]) -> f64 {
    let pts: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let vals = problem.evaluate_solution(coeffs, &pts).unwrap();
    pts.iter()
        .zip(vals)
        .map(|(x, v)| (v - (PI * x).sin()).abs())
        .fold(0.0, f64::max)
}
