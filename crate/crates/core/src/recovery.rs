//! Recovering candidate solutions `x` of the original system from lifted
//! vectors `y`.
//!
//! Every least-squares solution of the lifted system has the form
//! `y(t) = y⁺ + N·t` with `y⁺` the minimum-norm solution and `N` a null-space
//! basis. A genuine root corresponds to a `t` whose nonlinear block equals the
//! monomials of its own linear block; [`nullspace_search`] looks for such `t`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lift::LiftedSystem;
use crate::solvers::{
    least_squares_family, newton_solve, pinv_solve_matrix, NewtonOptions, DEFAULT_RANK_RTOL,
};
use crate::tensor::DenseMatrix;
use crate::system::PolynomialSystem;
use crate::util::{dist, norm};

/// Candidates closer than this in x-space are merged.
pub const DEDUP_DISTANCE: f64 = 1e-6;
/// A candidate counts as a root when `‖F(x)‖ ≤ ROOT_TOL·(1 + ‖b‖)`.
pub const ROOT_TOL: f64 = 1e-8;

const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateSource {
    /// Linear block of a lifted vector read off directly.
    Direct,
    /// Rank-one factorization of a monomial block: the dominant eigenpair of
    /// the pair matrix, or elementwise cube roots of the pure-cube entries.
    Rank1,
    /// Minimum of the consistency residual over the least-squares family.
    NullSearch,
    /// Newton refinement of another candidate.
    Polished,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSolution {
    pub x: Vec<f64>,
    /// Distance between `parent_y`'s nonlinear block and the monomials of `x`,
    /// relative to `1 + ‖parent nonlinear block‖`. Zero when there is no
    /// parent, since `x` then stands for its own exact embedding.
    pub consistency: f64,
    /// `‖F(x)‖`, always recomputed from the source system.
    pub nonlinear_residual: f64,
    pub source: CandidateSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent_y: Option<Vec<f64>>,
}

impl CandidateSolution {
    pub fn new(
        lift: &LiftedSystem,
        x: Vec<f64>,
        source: CandidateSource,
        parent_y: Option<Vec<f64>>,
    ) -> Result<Self> {
        let consistency = match &parent_y {
            Some(y) => consistency_against(lift, y, &x)?,
            None => 0.0,
        };
        let nonlinear_residual = lift.origin().eval_residual(&x)?.norm;
        Ok(Self {
            x,
            consistency,
            nonlinear_residual,
            source,
            parent_y,
        })
    }

    pub fn is_root(&self, sys: &PolynomialSystem) -> bool {
        self.nonlinear_residual <= ROOT_TOL * (1.0 + norm(sys.rhs()))
    }
}

fn check_y(lift: &LiftedSystem, y: &[f64]) -> Result<()> {
    if y.len() != lift.m() {
        return Err(Error::dim("y", lift.m(), y.len()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    Ok(())
}

fn consistency_against(lift: &LiftedSystem, y: &[f64], x: &[f64]) -> Result<f64> {
    check_y(lift, y)?;
    let n = lift.n();
    let emb = lift.monomial_embedding(x)?;
    let y_nl = &y[n..];
    Ok(dist(y_nl, &emb[n..]) / (1.0 + norm(y_nl)))
}

/// `‖y_nl − y(x)_nl‖ / (1 + ‖y_nl‖)` with `x` the linear block of `y`.
pub fn consistency_score(lift: &LiftedSystem, y: &[f64]) -> Result<f64> {
    check_y(lift, y)?;
    consistency_against(lift, y, &y[..lift.n()])
}

/// Direct and rank-one candidates read off a single lifted vector.
pub fn extract_candidates(lift: &LiftedSystem, y: &[f64]) -> Result<Vec<CandidateSolution>> {
    check_y(lift, y)?;
    let n = lift.n();
    let linear = &y[..n];
    let mut out = vec![CandidateSolution::new(
        lift,
        linear.to_vec(),
        CandidateSource::Direct,
        Some(y.to_vec()),
    )?];

    let mut rank1 = Vec::new();
    if let Some(block) = lift.block(2) {
        let pairs = &y[block.range()];
        let pm = lift.pair_map();
        let mut xmat = DMatrix::zeros(n, n);
        for (pos, (i, j)) in pm.pairs().enumerate() {
            xmat[(i - 1, j - 1)] = pairs[pos];
            xmat[(j - 1, i - 1)] = pairs[pos];
        }
        let eig = xmat.symmetric_eigen();
        let (k, lambda) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("n >= 1");
        let scale = lambda.max(0.0).sqrt();
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().map(|c| c * scale).collect();
        if v.iter().zip(linear).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        let flipped: Vec<f64> = v.iter().map(|c| -c).collect();
        rank1.push(v);
        if scale > 0.0 {
            rank1.push(flipped);
        }
    }
    if let (Some(block), Some(tm)) = (lift.block(3), lift.triple_map()) {
        let cubes = &y[block.range()];
        let x: Vec<f64> = (1..=n)
            .map(|i| cubes[tm.index(i, i, i).expect("diagonal triple") - 1].cbrt())
            .collect();
        rank1.push(x);
    }
    for x in rank1 {
        if out.iter().any(|c| dist(&c.x, &x) < DEDUP_DISTANCE) {
            continue;
        }
        out.push(CandidateSolution::new(
            lift,
            x,
            CandidateSource::Rank1,
            Some(y.to_vec()),
        )?);
    }
    Ok(out)
}

fn compare_candidates(a: &CandidateSolution, b: &CandidateSolution) -> Ordering {
    a.nonlinear_residual
        .total_cmp(&b.nonlinear_residual)
        .then(a.consistency.total_cmp(&b.consistency))
        .then_with(|| {
            a.x.iter()
                .zip(&b.x)
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Sorts by nonlinear residual, then consistency, then lexicographic `x`,
/// and drops any candidate within [`DEDUP_DISTANCE`] of a better one.
///
/// The sort is stable, so exact ties keep their input order.
pub fn rank_candidates(mut cands: Vec<CandidateSolution>) -> Vec<CandidateSolution> {
    cands.sort_by(compare_candidates);
    let mut kept: Vec<CandidateSolution> = Vec::with_capacity(cands.len());
    for c in cands {
        if kept.iter().all(|k| dist(&k.x, &c.x) >= DEDUP_DISTANCE) {
            kept.push(c);
        }
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub rank_rtol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            seed: 0,
            max_iter: 200,
            rank_rtol: DEFAULT_RANK_RTOL,
        }
    }
}

struct Family<'a> {
    lift: &'a LiftedSystem,
    y0: Vec<f64>,
    basis: DMatrix<f64>,
}

impl Family<'_> {
    fn point(&self, t: &DVector<f64>) -> Vec<f64> {
        let yt = &self.basis * t;
        self.y0.iter().zip(yt.iter()).map(|(a, b)| a + b).collect()
    }

    // c(t) = y_nl(t) − monomials(y_lin(t)).
    fn defect(&self, y: &[f64]) -> Result<DVector<f64>> {
        let n = self.lift.n();
        let emb = self.lift.monomial_embedding(&y[..n])?;
        Ok(DVector::from_iterator(
            y.len() - n,
            y[n..].iter().zip(&emb[n..]).map(|(a, b)| a - b),
        ))
    }

    fn defect_jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.lift.n();
        let e = self.lift.embedding_jacobian(&y[..n])?.to_nalgebra();
        let nl = self.basis.rows(n, self.basis.nrows() - n);
        let lin = self.basis.rows(0, n);
        Ok(nl - e * lin)
    }

    fn project(&self, y: &[f64]) -> DVector<f64> {
        let diff = DVector::from_iterator(y.len(), y.iter().zip(&self.y0).map(|(a, b)| a - b));
        self.basis.transpose() * diff
    }

    /// Damped Gauss–Newton on the defect, halving the step until the defect
    /// norm decreases.
    fn minimize(&self, mut t: DVector<f64>, max_iter: usize) -> Result<Vec<f64>> {
        let mut y = self.point(&t);
        let mut c = self.defect(&y)?;
        let mut cn = c.norm();
        for _ in 0..max_iter {
            let scale = 1.0 + norm(&y[self.lift.n()..]);
            if cn <= 1e-15 * scale {
                break;
            }
            let jac = self.defect_jacobian(&y)?;
            let jac = DenseMatrix::from_fn(jac.nrows(), jac.ncols(), |i, j| jac[(i, j)]);
            let rhs: Vec<f64> = c.iter().map(|v| -v).collect();
            let Ok(sol) = pinv_solve_matrix(&jac, &rhs, 1e-14) else {
                break;
            };
            let step = DVector::from_vec(sol.y);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..=MAX_HALVINGS {
                let trial_t = &t + alpha * &step;
                let trial_y = self.point(&trial_t);
                let trial_c = self.defect(&trial_y)?;
                let trial_n = trial_c.norm();
                if trial_n.is_finite() && trial_n < cn {
                    t = trial_t;
                    y = trial_y;
                    c = trial_c;
                    cn = trial_n;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted || alpha * step.norm() <= 1e-16 * (1.0 + t.norm()) {
                break;
            }
        }
        Ok(y)
    }
}

/// Searches the least-squares family `y⁺ + N·t` for consistent lifted
/// vectors, starting from `starts` seeded Gaussian points `x₀` projected onto
/// the family. Returns deduplicated candidates ranked by
/// [`rank_candidates`].
pub fn nullspace_search(lift: &LiftedSystem, opts: SearchOptions) -> Result<Vec<CandidateSolution>> {
    let family = least_squares_family(lift, opts.rank_rtol)?;
    if family.report.nullity == 0 {
        return Ok(rank_candidates(extract_candidates(lift, &family.particular.y)?));
    }
    let family = Family {
        lift,
        y0: family.particular.y,
        basis: family.null_basis.to_nalgebra(),
    };
    let n = lift.n();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut found = Vec::with_capacity(opts.starts);
    for _ in 0..opts.starts {
        let x0: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let t0 = family.project(&lift.monomial_embedding(&x0)?);
        let y = family.minimize(t0, opts.max_iter)?;
        let x = y[..n].to_vec();
        found.push(CandidateSolution::new(
            lift,
            x,
            CandidateSource::NullSearch,
            Some(y),
        )?);
    }
    Ok(rank_candidates(found))
}

/// Newton refinement of a candidate; returns the input unchanged when Newton
/// does not converge.
pub fn polish(
    lift: &LiftedSystem,
    cand: &CandidateSolution,
    opts: NewtonOptions,
) -> Result<CandidateSolution> {
    match newton_solve(lift.origin(), &cand.x, opts) {
        Ok(trace) if trace.converged => CandidateSolution::new(
            lift,
            trace.last().x.clone(),
            CandidateSource::Polished,
            None,
        ),
        _ => Ok(cand.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DenseMatrix;

    fn scalar_lift(d: f64, g: Option<f64>, r: Option<f64>, b: f64) -> LiftedSystem {
        let one = |v: f64| DenseMatrix::from_rows(&[[v]]).unwrap();
        let sys = PolynomialSystem::new(one(d), g.map(one), r.map(one), vec![b]).unwrap();
        LiftedSystem::build(&sys).unwrap()
    }

    #[test]
    fn consistency_examples() {
        let lift = scalar_lift(0., Some(1.), None, 1.);
        assert_eq!(consistency_score(&lift, &[2., 4.]).unwrap(), 0.0);
        assert!((consistency_score(&lift, &[2., 5.]).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(consistency_score(&lift, &[2.]).unwrap_err().code(), "dimension");
    }

    #[test]
    fn extract_for_unit_square() {
        let lift = scalar_lift(0., Some(1.), None, 1.);
        let cands = extract_candidates(&lift, &[0., 1.]).unwrap();
        assert_eq!(cands[0].source, CandidateSource::Direct);
        assert_eq!(cands[0].x, vec![0.]);
        assert!((cands[0].consistency - 0.5).abs() < 1e-15);
        let mut r1: Vec<f64> = cands[1..].iter().map(|c| c.x[0]).collect();
        r1.sort_by(f64::total_cmp);
        assert_eq!(r1.len(), 2);
        assert!((r1[0] + 1.).abs() < 1e-15 && (r1[1] - 1.).abs() < 1e-15);
        for c in &cands[1..] {
            assert_eq!(c.source, CandidateSource::Rank1);
            assert!(c.consistency < 1e-15);
            assert!(c.nonlinear_residual < 1e-15);
        }
    }

    #[test]
    fn rank1_sign_follows_linear_block() {
        let lift = scalar_lift(0., Some(1.), None, 1.);
        let cands = extract_candidates(&lift, &[-0.3, 1.]).unwrap();
        assert!((cands[1].x[0] + 1.).abs() < 1e-15);
    }

    #[test]
    fn extract_cube_root() {
        let lift = scalar_lift(0., None, Some(1.), 8.);
        let cands = extract_candidates(&lift, &[0., 8.]).unwrap();
        assert!(cands.iter().any(|c| (c.x[0] - 2.0).abs() < 1e-14 && c.consistency < 1e-15));
        let cands = extract_candidates(&lift, &[0., -27.]).unwrap();
        assert!(cands.iter().any(|c| (c.x[0] + 3.0).abs() < 1e-14));
    }

    #[test]
    fn extract_on_exact_embedding() {
        let sys = PolynomialSystem::random(3, 2, 8, None).unwrap();
        let lift = LiftedSystem::build(&sys).unwrap();
        let x = [0.4, -1.1, 2.0];
        let y = lift.monomial_embedding(&x).unwrap();
        let cands = extract_candidates(&lift, &y).unwrap();
        assert_eq!(cands[0].x, x.to_vec());
        assert_eq!(cands[0].consistency, 0.0);
        // The rank-one factor reproduces x and is merged into the direct candidate.
        assert!(cands[1..].iter().all(|c| dist(&c.x, &x) >= DEDUP_DISTANCE));
    }

    #[test]
    fn search_unit_square() {
        let lift = scalar_lift(0., Some(1.), None, 1.);
        let cands = nullspace_search(&lift, SearchOptions::default()).unwrap();
        let roots: Vec<f64> = cands
            .iter()
            .filter(|c| c.nonlinear_residual <= 1e-8)
            .map(|c| c.x[0])
            .collect();
        assert_eq!(roots.len(), 2, "{cands:?}");
        assert!(roots.iter().any(|&r| (r - 1.).abs() < 1e-8));
        assert!(roots.iter().any(|&r| (r + 1.).abs() < 1e-8));
    }

    #[test]
    fn search_double_root() {
        let lift = scalar_lift(0., Some(1.), None, 0.);
        let cands = nullspace_search(&lift, SearchOptions::default()).unwrap();
        assert!(cands.iter().any(|c| c.x[0].abs() < 1e-6 && c.consistency <= 1e-8), "{cands:?}");
    }

    #[test]
    fn search_no_real_root() {
        let lift = scalar_lift(0., Some(1.), None, -1.);
        let cands = nullspace_search(&lift, SearchOptions::default()).unwrap();
        assert!(cands.iter().all(|c| c.consistency > 0.1 && !c.is_root(lift.origin())));
    }

    #[test]
    fn search_is_deterministic() {
        let x = [0.5, -0.25, 1.0];
        let sys = PolynomialSystem::random(3, 2, 21, Some(&x)).unwrap();
        let lift = LiftedSystem::build(&sys).unwrap();
        let opts = SearchOptions {
            seed: 5,
            ..SearchOptions::default()
        };
        assert_eq!(nullspace_search(&lift, opts).unwrap(), nullspace_search(&lift, opts).unwrap());
    }

    #[test]
    fn polish_examples() {
        let lift = scalar_lift(0., Some(1.), None, 1.);
        let near = CandidateSolution::new(&lift, vec![1.02], CandidateSource::Direct, None).unwrap();
        let p = polish(&lift, &near, NewtonOptions::default()).unwrap();
        assert_eq!(p.source, CandidateSource::Polished);
        assert!((p.x[0] - 1.).abs() < 1e-10);

        let exact = CandidateSolution::new(&lift, vec![1.0], CandidateSource::Direct, None).unwrap();
        let p = polish(&lift, &exact, NewtonOptions::default()).unwrap();
        assert!((p.x[0] - 1.).abs() < 1e-12);

        let wrong = CandidateSolution::new(&lift, vec![-0.9], CandidateSource::Direct, None).unwrap();
        let p = polish(&lift, &wrong, NewtonOptions::default()).unwrap();
        assert!((p.x[0] + 1.).abs() < 1e-10);
    }

    #[test]
    fn polish_keeps_input_on_failure() {
        let lift = scalar_lift(0., Some(1.), None, -1.);
        let c = CandidateSolution::new(&lift, vec![0.3], CandidateSource::Direct, None).unwrap();
        assert_eq!(polish(&lift, &c, NewtonOptions::default()).unwrap(), c);
    }

    #[test]
    fn ranking_is_total_and_dedups() {
        let lift = scalar_lift(0., Some(1.), None, 1.);
        let mk = |x: f64| CandidateSolution::new(&lift, vec![x], CandidateSource::Direct, None).unwrap();
        let ranked = rank_candidates(vec![mk(0.5), mk(1.0), mk(-1.0), mk(1.0 + 1e-9)]);
        let xs: Vec<f64> = ranked.iter().map(|c| c.x[0]).collect();
        assert_eq!(xs, vec![-1.0, 1.0, 0.5]);
    }
}
