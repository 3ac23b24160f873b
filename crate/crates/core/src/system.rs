//! Kronecker-form polynomial systems `D·x + G·(x⊗x) + R·(x⊗x⊗x) = b`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{kron_vec, DenseMatrix};
use crate::util::norm;

/// Quadratic and/or cubic algebraic system in Kronecker form.
///
/// Column `(i−1)n + j` of `G` multiplies `x_i x_j`; column
/// `((i−1)n + (j−1))n + k` of `R` multiplies `x_i x_j x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystem {
    n: usize,
    d: DenseMatrix,
    g: Option<DenseMatrix>,
    r: Option<DenseMatrix>,
    b: Vec<f64>,
    pub meta: String,
}

impl PolynomialSystem {
    pub fn new(
        d: DenseMatrix,
        g: Option<DenseMatrix>,
        r: Option<DenseMatrix>,
        b: Vec<f64>,
    ) -> Result<Self> {
        let n = b.len();
        if n == 0 {
            return Err(Error::Domain("system dimension must be at least 1".into()));
        }
        if d.shape() != (n, n) {
            return Err(Error::dim("D", format!("{n}x{n}"), format!("{}x{}", d.rows(), d.cols())));
        }
        if let Some(g) = &g {
            if g.shape() != (n, n * n) {
                return Err(Error::dim(
                    "G",
                    format!("{n}x{}", n * n),
                    format!("{}x{}", g.rows(), g.cols()),
                ));
            }
        }
        if let Some(r) = &r {
            if r.shape() != (n, n * n * n) {
                return Err(Error::dim(
                    "R",
                    format!("{n}x{}", n * n * n),
                    format!("{}x{}", r.rows(), r.cols()),
                ));
            }
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("b"));
        }
        Ok(Self {
            n,
            d,
            g,
            r,
            b,
            meta: String::new(),
        })
    }

    pub fn with_meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = meta.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn linear(&self) -> &DenseMatrix {
        &self.d
    }

    pub fn quadratic(&self) -> Option<&DenseMatrix> {
        self.g.as_ref()
    }

    pub fn cubic(&self) -> Option<&DenseMatrix> {
        self.r.as_ref()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn is_linear(&self) -> bool {
        self.g.is_none() && self.r.is_none()
    }

    /// Same system with a different right-hand side.
    pub fn with_rhs(&self, b: Vec<f64>) -> Result<Self> {
        if b.len() != self.n {
            return Err(Error::dim("b", self.n, b.len()));
        }
        let mut out = self.clone();
        out.b = b;
        Ok(out)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::dim("x", self.n, x.len()));
        }
        Ok(())
    }

    /// `D·x + G·(x⊗x) + R·(x⊗x⊗x)` without subtracting `b`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut out = self.d.matvec(x)?;
        if let Some(g) = &self.g {
            let xx = kron_vec(x, x);
            for (o, v) in out.iter_mut().zip(g.matvec(&xx)?) {
                *o += v;
            }
        }
        if let Some(r) = &self.r {
            let xxx = kron_vec(&kron_vec(x, x), x);
            for (o, v) in out.iter_mut().zip(r.matvec(&xxx)?) {
                *o += v;
            }
        }
        Ok(out)
    }

    pub fn eval_residual(&self, x: &[f64]) -> Result<ResidualVector> {
        let mut values = self.apply(x)?;
        for (v, b) in values.iter_mut().zip(&self.b) {
            *v -= b;
        }
        Ok(ResidualVector::new(values))
    }

    /// Jacobian `D + G·(x⊗I + I⊗x) + R·(x⊗x⊗I + x⊗I⊗x + I⊗x⊗x)`.
    pub fn eval_jacobian(&self, x: &[f64]) -> Result<DenseMatrix> {
        self.check_len(x)?;
        let n = self.n;
        let mut jac = self.d.clone();
        if let Some(g) = &self.g {
            for row in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let c = g[(row, i * n + j)];
                        if c == 0.0 {
                            continue;
                        }
                        jac[(row, i)] += c * x[j];
                        jac[(row, j)] += c * x[i];
                    }
                }
            }
        }
        if let Some(r) = &self.r {
            for row in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let c = r[(row, (i * n + j) * n + k)];
                            if c == 0.0 {
                                continue;
                            }
                            jac[(row, i)] += c * x[j] * x[k];
                            jac[(row, j)] += c * x[i] * x[k];
                            jac[(row, k)] += c * x[i] * x[j];
                        }
                    }
                }
            }
        }
        Ok(jac)
    }

    /// Replaces `G` by its symmetric part with respect to `x_i x_j = x_j x_i`.
    pub fn symmetrize_quadratic(&self) -> Result<Self> {
        let g = self
            .g
            .as_ref()
            .ok_or_else(|| Error::Domain("symmetrize_quadratic needs a quadratic block".into()))?;
        let n = self.n;
        let sym = DenseMatrix::from_fn(n, n * n, |row, col| {
            let (i, j) = (col / n, col % n);
            0.5 * (g[(row, i * n + j)] + g[(row, j * n + i)])
        });
        let mut out = self.clone();
        out.g = Some(sym);
        Ok(out)
    }

    /// Seeded random system with standard normal entries.
    ///
    /// `degree` 2 gives a `G` block, 3 gives an `R` block. With a planted
    /// root, `b` is set so that the root satisfies the system exactly (up to
    /// rounding); otherwise `b` is drawn as well.
    pub fn random(n: usize, degree: u32, seed: u64, planted_root: Option<&[f64]>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("random system needs n >= 1".into()));
        }
        if !(2..=3).contains(&degree) {
            return Err(Error::Domain(format!("degree must be 2 or 3, got {degree}")));
        }
        if let Some(root) = planted_root {
            if root.len() != n {
                return Err(Error::dim("planted root", n, root.len()));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows: usize, cols: usize| {
            DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
        };
        let d = draw(n, n);
        let (g, r) = if degree == 2 {
            (Some(draw(n, n * n)), None)
        } else {
            (None, Some(draw(n, n * n * n)))
        };
        let b_drawn = draw(n, 1).as_slice().to_vec();
        let mut sys = Self::new(d, g, r, b_drawn)?;
        sys.meta = format!("random n={n} degree={degree} seed={seed}");
        if let Some(root) = planted_root {
            let b = sys.apply(root)?;
            sys = sys.with_rhs(b)?;
            sys.meta.push_str(" planted_root");
        }
        Ok(sys)
    }
}

/// Residual values and their Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualVector {
    pub values: Vec<f64>,
    pub norm: f64,
}

impl ResidualVector {
    pub fn new(values: Vec<f64>) -> Self {
        let norm = norm(&values);
        Self { values, norm }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(d: f64, g: Option<f64>, r: Option<f64>, b: f64) -> PolynomialSystem {
        let one = |v: f64| DenseMatrix::from_rows(&[[v]]).unwrap();
        PolynomialSystem::new(one(d), g.map(one), r.map(one), vec![b]).unwrap()
    }

    // Loop oracle independent of the Kronecker helpers.
    #[allow(clippy::needless_range_loop)]
    fn residual_oracle(sys: &PolynomialSystem, x: &[f64]) -> Vec<f64> {
        let n = sys.n();
        (0..n)
            .map(|row| {
                let mut acc = -sys.rhs()[row];
                for i in 0..n {
                    acc += sys.linear()[(row, i)] * x[i];
                }
                if let Some(g) = sys.quadratic() {
                    for i in 0..n {
                        for j in 0..n {
                            acc += g[(row, i * n + j)] * x[i] * x[j];
                        }
                    }
                }
                if let Some(r) = sys.cubic() {
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                acc += r[(row, (i * n + j) * n + k)] * x[i] * x[j] * x[k];
                            }
                        }
                    }
                }
                acc
            })
            .collect()
    }

    fn random_point(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn scalar_residuals() {
        assert_eq!(scalar(2., Some(3.), None, 5.).eval_residual(&[1.]).unwrap().values, vec![0.]);
        assert_eq!(scalar(0., None, Some(1.), 8.).eval_residual(&[2.]).unwrap().values, vec![0.]);
    }

    #[test]
    fn residual_matches_loop_oracle() {
        for seed in 0..10 {
            for degree in [2, 3] {
                let sys = PolynomialSystem::random(2, degree, seed, None).unwrap();
                let x = random_point(2, seed + 100);
                let got = sys.eval_residual(&x).unwrap().values;
                for (a, b) in got.iter().zip(residual_oracle(&sys, &x)) {
                    assert!((a - b).abs() <= 1e-13, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn residual_length_mismatch() {
        let sys = PolynomialSystem::random(2, 2, 0, None).unwrap();
        assert_eq!(sys.eval_residual(&[1.0]).unwrap_err().code(), "dimension");
        assert_eq!(sys.eval_jacobian(&[1.0, 2.0, 3.0]).unwrap_err().code(), "dimension");
    }

    #[test]
    fn scalar_jacobians() {
        assert_eq!(scalar(0., Some(1.), None, 0.).eval_jacobian(&[3.]).unwrap()[(0, 0)], 6.0);
        assert_eq!(scalar(0., None, Some(1.), 0.).eval_jacobian(&[2.]).unwrap()[(0, 0)], 12.0);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let h = 1e-5;
        for n in 1..=6 {
            for degree in [2, 3] {
                for seed in 0..3 {
                    let sys = PolynomialSystem::random(n, degree, seed, None).unwrap();
                    let x = random_point(n, seed + 7);
                    let jac = sys.eval_jacobian(&x).unwrap();
                    for col in 0..n {
                        let mut xp = x.clone();
                        let mut xm = x.clone();
                        xp[col] += h;
                        xm[col] -= h;
                        let fp = sys.eval_residual(&xp).unwrap().values;
                        let fm = sys.eval_residual(&xm).unwrap().values;
                        for row in 0..n {
                            let fd = (fp[row] - fm[row]) / (2.0 * h);
                            assert!(
                                (jac[(row, col)] - fd).abs() <= 1e-6,
                                "n={n} deg={degree} seed={seed} ({row},{col}): {} vs {fd}",
                                jac[(row, col)]
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn random_is_deterministic_and_shaped() {
        let a = PolynomialSystem::random(4, 2, 11, None).unwrap();
        let b = PolynomialSystem::random(4, 2, 11, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.quadratic().unwrap().shape(), (4, 16));
        assert_ne!(a, PolynomialSystem::random(4, 2, 12, None).unwrap());
        assert!(PolynomialSystem::random(3, 4, 0, None).is_err());
    }

    #[test]
    fn planted_root_is_a_root() {
        for degree in [2, 3] {
            let root = random_point(5, 3);
            let sys = PolynomialSystem::random(5, degree, 9, Some(&root)).unwrap();
            assert!(sys.eval_residual(&root).unwrap().norm <= 1e-12);
        }
    }

    #[test]
    fn symmetrize_examples() {
        let g = DenseMatrix::from_rows(&[[0., 1., 0., 0.], [1., 2., 2., 3.]]).unwrap();
        let sys = PolynomialSystem::new(DenseMatrix::zeros(2, 2), Some(g), None, vec![0., 0.])
            .unwrap();
        let sym = sys.symmetrize_quadratic().unwrap();
        assert_eq!(sym.quadratic().unwrap().row(0), &[0., 0.5, 0.5, 0.]);
        assert_eq!(sym.quadratic().unwrap().row(1), &[1., 2., 2., 3.]);
        assert_eq!(sym.symmetrize_quadratic().unwrap(), sym);
        assert_eq!(scalar(1., None, Some(1.), 0.).symmetrize_quadratic().unwrap_err().code(), "domain");
    }

    #[test]
    fn symmetrize_preserves_residual() {
        let sys = PolynomialSystem::random(4, 2, 5, None).unwrap();
        let sym = sys.symmetrize_quadratic().unwrap();
        for k in 0..50 {
            let x = random_point(4, 1000 + k);
            let a = sys.eval_residual(&x).unwrap().values;
            let b = sym.eval_residual(&x).unwrap().values;
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn residual_is_affine_in_rhs() {
        let sys = PolynomialSystem::random(3, 3, 2, None).unwrap();
        let zero = sys.with_rhs(vec![0.0; 3]).unwrap();
        let x = random_point(3, 4);
        let with_b = sys.eval_residual(&x).unwrap().values;
        let without = zero.eval_residual(&x).unwrap().values;
        for ((r, b), r0) in with_b.iter().zip(sys.rhs()).zip(&without) {
            assert!((r + b - r0).abs() <= 1e-14 * (1.0 + r0.abs()));
        }
    }

    #[test]
    fn new_rejects_bad_shapes() {
        let err = PolynomialSystem::new(
            DenseMatrix::zeros(2, 2),
            Some(DenseMatrix::zeros(2, 3)),
            None,
            vec![0.; 2],
        )
        .unwrap_err();
        assert!(err.to_string().contains('G'));
    }
}
