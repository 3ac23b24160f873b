//! Dense matrices with exact Hadamard and Kronecker products, the diagonal
//! selection matrices that connect the two, and the symmetric monomial index
//! maps used by the lift.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of entries a Kronecker product may produce.
pub const DEFAULT_KRON_CAP: usize = 10_000_000;

/// Row-major dense real matrix. All entries are finite.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![1.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("matrix data", rows * cols, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix data"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. An empty slice gives a 0×0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::Dimension {
                    context: "matrix rows",
                    expected: format!("{cols} entries in every row"),
                    actual: format!("{} entries in row {}", row.len(), i + 1),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Column vector (`len × 1`).
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column_vec(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| k * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "matrix sum", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "matrix difference", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &Self,
        context: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::dim(
                context,
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim(
                "matrix product",
                format!("{} rows on the right", self.cols),
                other.rows,
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dim("matrix-vector product", self.cols, x.len()));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Symmetric up to a relative tolerance of `1e-12 · max(1, max|a_ij|)`.
    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let tol = 1e-12 * self.max_abs().max(1.0);
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Entrywise product `a ∘ b`.
pub fn hadamard(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.zip_with(b, "hadamard product", |x, y| x * y)
}

/// Kronecker product with the default result-size cap.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    kron_with_cap(a, b, DEFAULT_KRON_CAP)
}

/// Kronecker product `a ⊗ b`; entry `((i,k),(j,l))` is `a[i][j]·b[k][l]`.
pub fn kron_with_cap(a: &DenseMatrix, b: &DenseMatrix, cap: usize) -> Result<DenseMatrix> {
    let rows = a.rows as u128 * b.rows as u128;
    let cols = a.cols as u128 * b.cols as u128;
    let requested = rows * cols;
    if requested > cap as u128 {
        return Err(Error::Capacity { requested, cap });
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut out = DenseMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            for k in 0..b.rows {
                let base = (i * b.rows + k) * cols + j * b.cols;
                for (l, &v) in b.row(k).iter().enumerate() {
                    out.data[base + l] = s * v;
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of two vectors, `x ⊗ y`.
pub fn kron_vec(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter()
        .flat_map(|&a| y.iter().map(move |&b| a * b))
        .collect()
}

/// `E_n = [e_1⊗e_1 : … : e_n⊗e_n]`, an `n² × n` matrix.
pub fn selection_matrix(n: usize) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::Domain("selection matrix needs n >= 1".into()));
    }
    let mut e = DenseMatrix::zeros(n * n, n);
    for k in 0..n {
        e[(k * n + k, k)] = 1.0;
    }
    Ok(e)
}

/// Hadamard product computed as `E_Nᵀ (a ⊗ b) E_M`.
pub fn hadamard_via_kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            "hadamard_via_kron",
            format!("{}x{}", a.rows, a.cols),
            format!("{}x{}", b.rows, b.cols),
        ));
    }
    let (n, m) = a.shape();
    if n == 0 || m == 0 {
        return Ok(DenseMatrix::zeros(n, m));
    }
    let en = selection_matrix(n)?;
    let em = selection_matrix(m)?;
    en.transpose().matmul(&kron(a, b)?)?.matmul(&em)
}

/// Outcome of the Schur-product eigenvalue bound check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralBoundReport {
    pub lower: f64,
    pub upper: f64,
    /// Eigenvalues of `a ∘ b`, ascending.
    pub eigenvalues: Vec<f64>,
    pub pass: bool,
}

/// Outcome of the determinant inequality check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetInequalityReport {
    pub det_product: f64,
    pub det_hadamard: f64,
    pub pass: bool,
}

const BOUND_SLACK: f64 = 1e-12;

fn check_symmetric_pair(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            "bound check",
            format!("{}x{}", a.rows, a.cols),
            format!("{}x{}", b.rows, b.cols),
        ));
    }
    if !a.is_symmetric() || !b.is_symmetric() {
        return Err(Error::Domain(
            "bound checks require symmetric square matrices".into(),
        ));
    }
    Ok(())
}

fn symmetric_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Checks `λ_min(a)·min b_ii ≤ λ_j(a∘b) ≤ λ_max(a)·max b_ii` for every `j`.
///
/// The slack is `1e-12 · max(1, |bound|)` on each side.
pub fn check_spectral_bounds(a: &DenseMatrix, b: &DenseMatrix) -> Result<SpectralBoundReport> {
    check_symmetric_pair(a, b)?;
    let n = a.rows;
    if n == 0 {
        return Err(Error::Domain("bound checks need n >= 1".into()));
    }
    let ea = symmetric_eigenvalues(a);
    let bdiag: Vec<f64> = (0..n).map(|i| b[(i, i)]).collect();
    let bmin = bdiag.iter().copied().fold(f64::INFINITY, f64::min);
    let bmax = bdiag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower = ea[0] * bmin;
    let upper = ea[n - 1] * bmax;
    let eigenvalues = symmetric_eigenvalues(&hadamard(a, b)?);
    let lo = lower - BOUND_SLACK * lower.abs().max(1.0);
    let hi = upper + BOUND_SLACK * upper.abs().max(1.0);
    let pass = eigenvalues.iter().all(|&l| l >= lo && l <= hi);
    Ok(SpectralBoundReport {
        lower,
        upper,
        eigenvalues,
        pass,
    })
}

/// Checks `det(a)·det(b) ≤ det(a∘b)` with slack `1e-12 · max(1, |det(a∘b)|)`.
pub fn check_det_inequality(a: &DenseMatrix, b: &DenseMatrix) -> Result<DetInequalityReport> {
    check_symmetric_pair(a, b)?;
    let det_product = a.to_nalgebra().determinant() * b.to_nalgebra().determinant();
    let det_hadamard = hadamard(a, b)?.to_nalgebra().determinant();
    let slack = BOUND_SLACK * det_hadamard.abs().max(det_product.abs()).max(1.0);
    Ok(DetInequalityReport {
        det_product,
        det_hadamard,
        pass: det_product <= det_hadamard + slack,
    })
}

/// Lexicographic enumeration of pairs `(i, j)`, `1 ≤ i ≤ j ≤ n`.
///
/// Positions are 1-based: `pos(i,j) = (i−1)(2n−i+2)/2 + (j−i+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairIndexMap {
    n: usize,
}

impl PairIndexMap {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize) -> Result<usize> {
        let n = self.n;
        if !(1 <= i && i <= j && j <= n) {
            return Err(Error::Domain(format!(
                "pair ({i},{j}) outside 1 <= i <= j <= {n}"
            )));
        }
        Ok((i - 1) * (2 * n - i + 2) / 2 + (j - i + 1))
    }

    pub fn unindex(&self, p: usize) -> Result<(usize, usize)> {
        if p == 0 || p > self.len() {
            return Err(Error::Domain(format!(
                "pair position {p} outside 1..={}",
                self.len()
            )));
        }
        // Row i holds n − i + 1 pairs.
        let mut start = 0;
        for i in 1..=self.n {
            let run = self.n - i + 1;
            if p <= start + run {
                return Ok((i, i + (p - start) - 1));
            }
            start += run;
        }
        unreachable!("position checked against len")
    }

    /// All pairs in position order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.n).flat_map(move |i| (i..=self.n).map(move |j| (i, j)))
    }
}

/// Lexicographic enumeration of triples `(i, j, k)`, `1 ≤ i ≤ j ≤ k ≤ n`,
/// with 1-based positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleIndexMap {
    n: usize,
}

impl TripleIndexMap {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * (self.n + 1) * (self.n + 2) / 6
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    // Number of triples whose leading index is strictly below `i`.
    fn before_leading(&self, i: usize) -> usize {
        let n = self.n;
        // Triples with leading index >= i form a tetrahedron of side n − i + 1.
        let rest = n - i + 1;
        self.len() - rest * (rest + 1) * (rest + 2) / 6
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> Result<usize> {
        let n = self.n;
        if !(1 <= i && i <= j && j <= k && k <= n) {
            return Err(Error::Domain(format!(
                "triple ({i},{j},{k}) outside 1 <= i <= j <= k <= {n}"
            )));
        }
        // Within leading index i the (j, k) pairs run over an upper triangle
        // of side n − i + 1.
        let inner = PairIndexMap::new(n - i + 1).index(j - i + 1, k - i + 1)?;
        Ok(self.before_leading(i) + inner)
    }

    pub fn unindex(&self, p: usize) -> Result<(usize, usize, usize)> {
        if p == 0 || p > self.len() {
            return Err(Error::Domain(format!(
                "triple position {p} outside 1..={}",
                self.len()
            )));
        }
        for i in (1..=self.n).rev() {
            let start = self.before_leading(i);
            if p > start {
                let (j, k) = PairIndexMap::new(self.n - i + 1).unindex(p - start)?;
                return Ok((i, j + i - 1, k + i - 1));
            }
        }
        unreachable!("position checked against len")
    }

    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let n = self.n;
        (1..=n).flat_map(move |i| (i..=n).flat_map(move |j| (j..=n).map(move |k| (i, j, k))))
    }
}
