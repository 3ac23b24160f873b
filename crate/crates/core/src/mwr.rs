//! Point-collocation discretization of 1-D quadratic differential problems
//!
//! ```text
//! p(u)·r(u) + L(u) = f   on (a, b)
//! ```
//!
//! with linear differential operators `p`, `r`, `L`. The trial function is
//! `û = Σ c_k φ_k`; enforcing the equation at interior nodes gives rows
//! `D[j][k] = (Lφ_k)(x_j)` and `G[j][(k−1)n + l] = (pφ_k)(x_j)·(rφ_l)(x_j)`.
//! Each boundary condition replaces one collocation row with a linear row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::PolynomialSystem;
use crate::tensor::DenseMatrix;

pub const MAX_DERIVATIVE_ORDER: u32 = 4;

/// `coeff(x) · d^order/dx^order`, with `coeff` given by ascending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorTerm {
    pub order: u32,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearOperatorSpec {
    pub terms: Vec<OperatorTerm>,
}

impl LinearOperatorSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The identity operator `u ↦ u`.
    pub fn identity() -> Self {
        Self::derivative(0, 1.0)
    }

    /// `u ↦ scale · u^(order)`.
    pub fn derivative(order: u32, scale: f64) -> Self {
        Self {
            terms: vec![OperatorTerm {
                order,
                coeffs: vec![scale],
            }],
        }
    }

    pub fn plus(mut self, order: u32, coeffs: Vec<f64>) -> Self {
        self.terms.push(OperatorTerm { order, coeffs });
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeffs.iter().all(|&c| c == 0.0))
    }

    pub fn max_order(&self) -> u32 {
        self.terms.iter().map(|t| t.order).max().unwrap_or(0)
    }

    fn validate(&self, name: &str) -> Result<()> {
        for t in &self.terms {
            if t.order > MAX_DERIVATIVE_ORDER {
                return Err(Error::Domain(format!(
                    "operator {name}: derivative order {} exceeds {MAX_DERIVATIVE_ORDER}",
                    t.order
                )));
            }
            if t.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("operator coefficient"));
            }
        }
        Ok(())
    }

    /// `(Lφ_k)(x)` for every basis function, given `derivs[d][k] = φ_k^(d)(x)`.
    fn apply(&self, x: f64, derivs: &[Vec<f64>]) -> Vec<f64> {
        let n = derivs[0].len();
        let mut out = vec![0.0; n];
        for t in &self.terms {
            let c = horner(&t.coeffs, x);
            for (o, d) in out.iter_mut().zip(&derivs[t.order as usize]) {
                *o += c * d;
            }
        }
        out
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    /// `φ_k(x) = x^(k−1)` on the raw coordinate.
    Monomial,
    /// `φ_k(x) = T_(k−1)(t)` with `t` the affine map of `[a, b]` onto `[−1, 1]`.
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Forcing {
    /// Ascending polynomial coefficients in `x`.
    Polynomial(Vec<f64>),
    /// Values at the interior collocation nodes, in ascending node order.
    Nodal(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Value,
    Derivative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub at: f64,
    pub kind: BcKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwrProblem {
    pub domain: [f64; 2],
    #[serde(default)]
    pub p: LinearOperatorSpec,
    #[serde(default)]
    pub r: LinearOperatorSpec,
    #[serde(rename = "L", default)]
    pub l: LinearOperatorSpec,
    pub f: Forcing,
    pub n_basis: usize,
    pub basis: BasisKind,
    #[serde(default)]
    pub bc: Vec<BoundaryCondition>,
}

/// Basis values and derivatives at the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEvaluation {
    pub nodes: Vec<f64>,
    /// `values[d][(j, k)] = φ_k^(d)(x_j)`, for `d = 0..=order`.
    pub values: Vec<DenseMatrix>,
}

impl MwrProblem {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Domain(format!("domain [{a}, {b}] must satisfy a < b")));
        }
        if self.n_basis < self.bc.len() + 1 {
            return Err(Error::Domain(format!(
                "n_basis = {} must exceed the {} boundary conditions",
                self.n_basis,
                self.bc.len()
            )));
        }
        self.p.validate("p")?;
        self.r.validate("r")?;
        self.l.validate("L")?;
        for bc in &self.bc {
            if bc.at != a && bc.at != b {
                return Err(Error::Domain(format!(
                    "boundary condition at {} is not an endpoint of [{a}, {b}]",
                    bc.at
                )));
            }
            if !bc.value.is_finite() {
                return Err(Error::NonFinite("boundary value"));
            }
        }
        match &self.f {
            Forcing::Polynomial(c) if c.iter().any(|v| !v.is_finite()) => {
                return Err(Error::NonFinite("forcing"))
            }
            Forcing::Nodal(v) => {
                if v.len() != self.interior_count() {
                    return Err(Error::dim("nodal forcing", self.interior_count(), v.len()));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("forcing"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn interior_count(&self) -> usize {
        self.n_basis.saturating_sub(self.bc.len())
    }

    /// Chebyshev–Gauss points mapped into `(a, b)`, ascending.
    pub fn collocation_nodes(&self) -> Vec<f64> {
        let [a, b] = self.domain;
        let m = self.interior_count();
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        (1..=m)
            .map(|j| {
                let theta = (2 * j - 1) as f64 * std::f64::consts::PI / (2 * m) as f64;
                mid - half * theta.cos()
            })
            .collect()
    }

    /// `derivs[d][k] = φ_(k+1)^(d)(x)` for `d = 0..=max_order`.
    fn basis_derivatives(&self, x: f64, max_order: u32) -> Vec<Vec<f64>> {
        let n = self.n_basis;
        let orders = max_order as usize + 1;
        let mut out = vec![vec![0.0; n]; orders];
        match self.basis {
            BasisKind::Monomial => {
                for (d, row) in out.iter_mut().enumerate() {
                    for (k, v) in row.iter_mut().enumerate() {
                        if k >= d {
                            let falling: f64 = ((k - d + 1)..=k).map(|i| i as f64).product();
                            *v = falling * x.powi((k - d) as i32);
                        }
                    }
                }
            }
            BasisKind::Chebyshev => {
                let [a, b] = self.domain;
                let t = (2.0 * x - a - b) / (b - a);
                let s = 2.0 / (b - a);
                // T_(k+1)^(d) = 2t·T_k^(d) + 2d·T_k^(d−1) − T_(k−1)^(d)
                for d in 0..orders {
                    if n > 0 {
                        out[d][0] = if d == 0 { 1.0 } else { 0.0 };
                    }
                    if n > 1 {
                        out[d][1] = match d {
                            0 => t,
                            1 => 1.0,
                            _ => 0.0,
                        };
                    }
                    for k in 1..n.saturating_sub(1) {
                        let lower = if d > 0 { out[d - 1][k] } else { 0.0 };
                        out[d][k + 1] = 2.0 * t * out[d][k] + 2.0 * d as f64 * lower - out[d][k - 1];
                    }
                }
                for (d, row) in out.iter_mut().enumerate() {
                    let chain = s.powi(d as i32);
                    row.iter_mut().for_each(|v| *v *= chain);
                }
            }
        }
        out
    }

    pub fn basis_eval(&self, order: u32) -> Result<BasisEvaluation> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::Domain(format!(
                "derivative order {order} exceeds {MAX_DERIVATIVE_ORDER}"
            )));
        }
        self.validate()?;
        let nodes = self.collocation_nodes();
        let per_node: Vec<_> = nodes.iter().map(|&x| self.basis_derivatives(x, order)).collect();
        let values = (0..=order as usize)
            .map(|d| DenseMatrix::from_fn(nodes.len(), self.n_basis, |j, k| per_node[j][d][k]))
            .collect();
        Ok(BasisEvaluation { nodes, values })
    }

    fn forcing_at(&self, j: usize, x: f64) -> f64 {
        match &self.f {
            Forcing::Polynomial(c) => horner(c, x),
            Forcing::Nodal(v) => v[j],
        }
    }

    /// Collocation rows for the interior nodes followed by one row per
    /// boundary condition, in the order given.
    pub fn build_collocation_system(&self) -> Result<PolynomialSystem> {
        self.validate()?;
        let n = self.n_basis;
        let max_order = self.p.max_order().max(self.r.max_order()).max(self.l.max_order()).max(1);
        let quadratic = !self.p.is_zero() && !self.r.is_zero();
        let mut d = DenseMatrix::zeros(n, n);
        let mut g = quadratic.then(|| DenseMatrix::zeros(n, n * n));
        let mut rhs = vec![0.0; n];

        for (j, &x) in self.collocation_nodes().iter().enumerate() {
            let derivs = self.basis_derivatives(x, max_order);
            for (k, v) in self.l.apply(x, &derivs).into_iter().enumerate() {
                d[(j, k)] = v;
            }
            if let Some(g) = g.as_mut() {
                let pv = self.p.apply(x, &derivs);
                let rv = self.r.apply(x, &derivs);
                for k in 0..n {
                    for l in 0..n {
                        g[(j, k * n + l)] = pv[k] * rv[l];
                    }
                }
            }
            rhs[j] = self.forcing_at(j, x);
        }
        let first_bc_row = self.interior_count();
        for (i, bc) in self.bc.iter().enumerate() {
            let row = first_bc_row + i;
            let derivs = self.basis_derivatives(bc.at, 1);
            let source = match bc.kind {
                BcKind::Value => &derivs[0],
                BcKind::Derivative => &derivs[1],
            };
            for (k, &v) in source.iter().enumerate() {
                d[(row, k)] = v;
            }
            rhs[row] = bc.value;
        }
        let basis = match self.basis {
            BasisKind::Monomial => "monomial",
            BasisKind::Chebyshev => "chebyshev",
        };
        Ok(PolynomialSystem::new(d, g, None, rhs)?.with_meta(format!(
            "collocation n_basis={n} basis={basis} domain=[{}, {}] bc={}",
            self.domain[0],
            self.domain[1],
            self.bc.len()
        )))
    }

    /// `û(x) = Σ c_k φ_k(x)` at each point.
    pub fn evaluate_solution(&self, coeffs: &[f64], points: &[f64]) -> Result<Vec<f64>> {
        self.evaluate_derivative(coeffs, points, 0)
    }

    /// `û^(order)(x)` at each point.
    pub fn evaluate_derivative(&self, coeffs: &[f64], points: &[f64], order: u32) -> Result<Vec<f64>> {
        if coeffs.len() != self.n_basis {
            return Err(Error::dim("coefficients", self.n_basis, coeffs.len()));
        }
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::Domain(format!("derivative order {order} exceeds {MAX_DERIVATIVE_ORDER}")));
        }
        let [a, b] = self.domain;
        points
            .iter()
            .map(|&x| {
                if !(a..=b).contains(&x) {
                    return Err(Error::Domain(format!("point {x} outside [{a}, {b}]")));
                }
                let derivs = self.basis_derivatives(x, order);
                Ok(derivs[order as usize].iter().zip(coeffs).map(|(p, c)| p * c).sum())
            })
            .collect()
    }
}
