//! Linear-algebra engines for lifted systems plus the Newton–Raphson
//! baseline on the original nonlinear system.
//!
//! One SVD per matrix drives rank, pseudoinverse and null space so the three
//! always agree on which singular values count as zero.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lift::LiftedSystem;
use crate::system::PolynomialSystem;
use crate::tensor::DenseMatrix;
use crate::util::norm;

/// Default relative rank tolerance: `σ` counts as nonzero when `σ > rtol·σ_max`.
pub const DEFAULT_RANK_RTOL: f64 = 1e-10;
/// Default ridge for the regularized normal equations.
pub const DEFAULT_RIDGE: f64 = 1e-10;

/// Singular-value summary of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvdReport {
    /// The `min(rows, cols)` singular values, descending.
    pub singular_values: Vec<f64>,
    pub numerical_rank: usize,
    pub nullity: usize,
    pub rank_tolerance: f64,
    /// `σ_max / σ_rank`; infinite when the rank is zero. Serialized as `null`
    /// in that case.
    #[serde(serialize_with = "finite_or_null")]
    pub condition_estimate: f64,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Full SVD `P = U Σ Vᵀ` with a complete set of `m` right singular vectors.
struct Factorization {
    rows: usize,
    /// Left singular vectors, `rows × min(rows, m)`.
    u: DMatrix<f64>,
    /// Length `m`, descending; entries past `min(rows, m)` are structural zeros.
    sigma: Vec<f64>,
    /// `m × m`, column `i` pairs with `sigma[i]`.
    v: DMatrix<f64>,
    rank: usize,
    tol: f64,
}

impl Factorization {
    fn new(p: &DenseMatrix, rank_rtol: f64) -> Result<Self> {
        if !(rank_rtol.is_finite() && rank_rtol >= 0.0) {
            return Err(Error::Domain(format!("rank tolerance must be >= 0, got {rank_rtol}")));
        }
        let (rows, m) = p.shape();
        if rows == 0 || m == 0 {
            return Err(Error::Domain("SVD of an empty matrix".into()));
        }
        let fm = faer::Mat::<f64>::from_fn(rows, m, |i, j| p[(i, j)]);
        let svd = fm
            .svd()
            .map_err(|e| Error::numerical("svd", format!("no convergence: {e:?}")))?;
        let k = rows.min(m);
        let s = svd.S().column_vector();
        let mut sigma: Vec<f64> = (0..k).map(|i| s[i]).collect();
        sigma.resize(m, 0.0);
        if sigma.iter().any(|s| !s.is_finite()) {
            return Err(Error::numerical("svd", "non-finite singular value"));
        }
        let (fu, fv) = (svd.U(), svd.V());
        let u = DMatrix::from_fn(rows, k, |i, j| fu[(i, j)]);
        let v = DMatrix::from_fn(m, m, |i, j| fv[(i, j)]);
        let tol = rank_rtol * sigma[0];
        let rank = sigma[..k].iter().filter(|&&s| s > tol).count();
        Ok(Self {
            rows,
            u,
            sigma,
            v,
            rank,
            tol,
        })
    }

    fn report(&self) -> SvdReport {
        let m = self.v.nrows();
        let k = self.rows.min(m);
        let condition_estimate = if self.rank == 0 {
            f64::INFINITY
        } else {
            self.sigma[0] / self.sigma[self.rank - 1]
        };
        SvdReport {
            singular_values: self.sigma[..k].to_vec(),
            numerical_rank: self.rank,
            nullity: m - self.rank,
            rank_tolerance: self.tol,
            condition_estimate,
        }
    }

    fn pinv_apply(&self, b: &[f64]) -> Vec<f64> {
        let m = self.v.nrows();
        let mut y = DVector::zeros(m);
        for i in 0..self.rank {
            let coeff = (0..self.rows).map(|r| self.u[(r, i)] * b[r]).sum::<f64>() / self.sigma[i];
            y.axpy(coeff, &self.v.column(i), 1.0);
        }
        y.iter().copied().collect()
    }

    fn pinv_matrix(&self) -> DenseMatrix {
        let m = self.v.nrows();
        DenseMatrix::from_fn(m, self.rows, |i, j| {
            (0..self.rank)
                .map(|k| self.v[(i, k)] * self.u[(j, k)] / self.sigma[k])
                .sum()
        })
    }

    fn null_basis(&self) -> DenseMatrix {
        let m = self.v.nrows();
        DenseMatrix::from_fn(m, m - self.rank, |i, j| self.v[(i, self.rank + j)])
    }
}

pub fn svd_analyze(p: &DenseMatrix, rank_rtol: f64) -> Result<SvdReport> {
    Ok(Factorization::new(p, rank_rtol)?.report())
}

/// Explicit Moore–Penrose pseudoinverse via truncated SVD.
pub fn pseudoinverse(p: &DenseMatrix, rank_rtol: f64) -> Result<DenseMatrix> {
    Ok(Factorization::new(p, rank_rtol)?.pinv_matrix())
}

/// Minimum-norm least-squares solution of `P·y = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PinvSolution {
    pub y: Vec<f64>,
    pub residual_norm: f64,
}

pub fn pinv_solve_matrix(p: &DenseMatrix, b: &[f64], rank_rtol: f64) -> Result<PinvSolution> {
    if b.len() != p.rows() {
        return Err(Error::dim("right-hand side", p.rows(), b.len()));
    }
    let y = Factorization::new(p, rank_rtol)?.pinv_apply(b);
    let residual_norm = residual_norm(p, &y, b)?;
    Ok(PinvSolution { y, residual_norm })
}

pub fn pinv_solve(lift: &LiftedSystem, rank_rtol: f64) -> Result<PinvSolution> {
    pinv_solve_matrix(lift.matrix(), lift.rhs(), rank_rtol)
}

/// Orthonormal basis (as columns) of the numerical null space of `P`.
pub fn nullspace_basis_matrix(p: &DenseMatrix, rank_rtol: f64) -> Result<DenseMatrix> {
    Ok(Factorization::new(p, rank_rtol)?.null_basis())
}

pub fn nullspace_basis(lift: &LiftedSystem, rank_rtol: f64) -> Result<DenseMatrix> {
    nullspace_basis_matrix(lift.matrix(), rank_rtol)
}

/// Particular solution, null-space basis and report from a single SVD.
pub struct LeastSquaresFamily {
    pub particular: PinvSolution,
    pub null_basis: DenseMatrix,
    pub report: SvdReport,
}

pub fn least_squares_family(lift: &LiftedSystem, rank_rtol: f64) -> Result<LeastSquaresFamily> {
    let f = Factorization::new(lift.matrix(), rank_rtol)?;
    let y = f.pinv_apply(lift.rhs());
    let residual_norm = residual_norm(lift.matrix(), &y, lift.rhs())?;
    Ok(LeastSquaresFamily {
        particular: PinvSolution { y, residual_norm },
        null_basis: f.null_basis(),
        report: f.report(),
    })
}

fn residual_norm(p: &DenseMatrix, y: &[f64], b: &[f64]) -> Result<f64> {
    let py = p.matvec(y)?;
    Ok(py.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Solves the regularized normal equations `(PᵀP + ridge·I)·y = Pᵀb`.
///
/// Rejects `ridge = 0` on wide matrices: `PᵀP` then has rank at most
/// `rows < cols` and cannot be factorized.
pub fn normal_eq_solve_matrix(p: &DenseMatrix, b: &[f64], ridge: f64) -> Result<Vec<f64>> {
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::Domain(format!("ridge must be finite and >= 0, got {ridge}")));
    }
    if b.len() != p.rows() {
        return Err(Error::dim("right-hand side", p.rows(), b.len()));
    }
    let (n, m) = p.shape();
    if ridge == 0.0 && m > n {
        return Err(Error::Singular(format!(
            "PᵀP is {m}x{m} with rank at most {n}; the unregularized least-squares \
             system of a lifted problem is ill-posed, use ridge > 0"
        )));
    }
    let pn = p.to_nalgebra();
    let mut normal = pn.transpose() * &pn;
    for i in 0..m {
        normal[(i, i)] += ridge;
    }
    let rhs = pn.transpose() * DVector::from_column_slice(b);
    let chol = normal.cholesky().ok_or_else(|| {
        Error::Singular(format!(
            "PᵀP + {ridge}·I is not numerically positive definite"
        ))
    })?;
    let y = chol.solve(&rhs);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("normal equations", "non-finite solution"));
    }
    Ok(y.iter().copied().collect())
}

pub fn normal_eq_solve(lift: &LiftedSystem, ridge: f64) -> Result<Vec<f64>> {
    normal_eq_solve_matrix(lift.matrix(), lift.rhs(), ridge)
}

/// Options for [`newton_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    /// Converged when `‖F(x)‖ ≤ tol·(1 + ‖b‖)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonIterate {
    pub x: Vec<f64>,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonTrace {
    /// Starting point first, then one entry per step.
    pub iterates: Vec<NewtonIterate>,
    pub converged: bool,
    pub iterations: usize,
}

impl NewtonTrace {
    pub fn last(&self) -> &NewtonIterate {
        self.iterates.last().expect("trace always holds the starting point")
    }
}

/// Newton–Raphson on `F(x) = D·x + G·(x⊗x) + R·(x⊗x⊗x) − b`.
///
/// A singular Jacobian is shifted to `J + μI`, `μ = 1e-8·‖J‖_F` (or `1e-8`
/// when `J = 0`), doubling `μ` until the shifted system solves.
pub fn newton_solve(sys: &PolynomialSystem, x0: &[f64], opts: NewtonOptions) -> Result<NewtonTrace> {
    if x0.len() != sys.n() {
        return Err(Error::dim("x0", sys.n(), x0.len()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("x0"));
    }
    let threshold = opts.tol * (1.0 + norm(sys.rhs()));
    let mut x = x0.to_vec();
    let mut f = sys.eval_residual(&x)?;
    let mut iterates = vec![NewtonIterate {
        x: x.clone(),
        residual_norm: f.norm,
    }];
    let mut iterations = 0;
    while f.norm > threshold && iterations < opts.max_iter {
        let jac = sys.eval_jacobian(&x)?;
        let step = solve_shifted(&jac, &f.values)?;
        for (xi, s) in x.iter_mut().zip(&step) {
            *xi -= s;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(
                "newton",
                format!("non-finite iterate after {} steps", iterations + 1),
            ));
        }
        f = sys.eval_residual(&x)?;
        if !f.norm.is_finite() {
            return Err(Error::numerical("newton", "non-finite residual"));
        }
        iterations += 1;
        iterates.push(NewtonIterate {
            x: x.clone(),
            residual_norm: f.norm,
        });
    }
    Ok(NewtonTrace {
        converged: f.norm <= threshold,
        iterates,
        iterations,
    })
}

fn solve_shifted(jac: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let j = jac.to_nalgebra();
    let b = DVector::from_column_slice(rhs);
    let try_solve = |m: DMatrix<f64>| {
        m.lu()
            .solve(&b)
            .filter(|s| s.iter().all(|v| v.is_finite()))
    };
    if let Some(s) = try_solve(j.clone()) {
        return Ok(s.iter().copied().collect());
    }
    let jnorm = jac.frobenius_norm();
    let mut mu = if jnorm > 0.0 { 1e-8 * jnorm } else { 1e-8 };
    for _ in 0..200 {
        let mut shifted = j.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += mu;
        }
        if let Some(s) = try_solve(shifted) {
            return Ok(s.iter().copied().collect());
        }
        mu *= 2.0;
    }
    Err(Error::numerical("newton", "Jacobian shift failed to regularize"))
}
