//! Lifting a polynomial system to the linear system `P·y = b` by treating
//! every distinct monomial as an independent unknown.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::PolynomialSystem;
use crate::tensor::{DenseMatrix, PairIndexMap, TripleIndexMap};

/// A contiguous run of `y` columns holding monomials of one degree.
///
/// `offset` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MonomialBlock {
    pub degree: u32,
    pub offset: usize,
    pub len: usize,
}

impl MonomialBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// The underdetermined linear system obtained from a [`PolynomialSystem`].
///
/// Columns are ordered: the `n` linear unknowns, then the pairs `x_i x_j`
/// (`i ≤ j`, lexicographic) when a quadratic block is present, then the
/// triples `x_i x_j x_k` (`i ≤ j ≤ k`) when a cubic block is present.
#[derive(Debug, Clone)]
pub struct LiftedSystem {
    p: DenseMatrix,
    b: Vec<f64>,
    blocks: Vec<MonomialBlock>,
    pair_map: PairIndexMap,
    triple_map: Option<TripleIndexMap>,
    origin: PolynomialSystem,
}

impl LiftedSystem {
    pub fn build(sys: &PolynomialSystem) -> Result<Self> {
        if sys.is_linear() {
            return Err(Error::DegenerateLift);
        }
        let n = sys.n();
        let pair_map = PairIndexMap::new(n);
        let triple_map = sys.cubic().map(|_| TripleIndexMap::new(n));

        let mut blocks = vec![MonomialBlock {
            degree: 1,
            offset: 0,
            len: n,
        }];
        let mut m = n;
        if sys.quadratic().is_some() {
            blocks.push(MonomialBlock {
                degree: 2,
                offset: m,
                len: pair_map.len(),
            });
            m += pair_map.len();
        }
        if let Some(tm) = &triple_map {
            blocks.push(MonomialBlock {
                degree: 3,
                offset: m,
                len: tm.len(),
            });
            m += tm.len();
        }

        let mut p = DenseMatrix::zeros(n, m);
        let d = sys.linear();
        for row in 0..n {
            for col in 0..n {
                p[(row, col)] = d[(row, col)];
            }
        }
        if let Some(g) = sys.quadratic() {
            let offset = blocks[1].offset;
            for (pos, (i, j)) in pair_map.pairs().enumerate() {
                let (i, j) = (i - 1, j - 1);
                for row in 0..n {
                    let mut v = g[(row, i * n + j)];
                    if i != j {
                        v += g[(row, j * n + i)];
                    }
                    p[(row, offset + pos)] = v;
                }
            }
        }
        if let (Some(r), Some(tm)) = (sys.cubic(), &triple_map) {
            let offset = blocks.last().map(|b| b.offset).unwrap_or(n);
            for (pos, (i, j, k)) in tm.triples().enumerate() {
                let perms = distinct_permutations([i - 1, j - 1, k - 1]);
                for row in 0..n {
                    p[(row, offset + pos)] = perms
                        .iter()
                        .map(|&[a, b, c]| r[(row, (a * n + b) * n + c)])
                        .sum();
                }
            }
        }

        Ok(Self {
            p,
            b: sys.rhs().to_vec(),
            blocks,
            pair_map,
            triple_map,
            origin: sys.clone(),
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.p
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn blocks(&self) -> &[MonomialBlock] {
        &self.blocks
    }

    pub fn pair_map(&self) -> PairIndexMap {
        self.pair_map
    }

    pub fn triple_map(&self) -> Option<TripleIndexMap> {
        self.triple_map
    }

    pub fn origin(&self) -> &PolynomialSystem {
        &self.origin
    }

    /// Number of original unknowns.
    pub fn n(&self) -> usize {
        self.p.rows()
    }

    /// Number of lifted unknowns.
    pub fn m(&self) -> usize {
        self.p.cols()
    }

    pub fn block(&self, degree: u32) -> Option<MonomialBlock> {
        self.blocks.iter().copied().find(|b| b.degree == degree)
    }

    /// Exact lifted image `y(x)` of a point `x`.
    pub fn monomial_embedding(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::dim("x", self.n(), x.len()));
        }
        let mut y = Vec::with_capacity(self.m());
        y.extend_from_slice(x);
        if self.block(2).is_some() {
            y.extend(self.pair_map.pairs().map(|(i, j)| x[i - 1] * x[j - 1]));
        }
        if let Some(tm) = &self.triple_map {
            y.extend(tm.triples().map(|(i, j, k)| x[i - 1] * x[j - 1] * x[k - 1]));
        }
        Ok(y)
    }

    /// Derivative of the nonlinear part of `y(x)` with respect to `x`, as an
    /// `(m − n) × n` matrix.
    pub fn embedding_jacobian(&self, x: &[f64]) -> Result<DenseMatrix> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::dim("x", n, x.len()));
        }
        let mut jac = DenseMatrix::zeros(self.m() - n, n);
        let mut row = 0;
        if self.block(2).is_some() {
            for (i, j) in self.pair_map.pairs() {
                let (i, j) = (i - 1, j - 1);
                jac[(row, i)] += x[j];
                jac[(row, j)] += x[i];
                row += 1;
            }
        }
        if let Some(tm) = &self.triple_map {
            for (i, j, k) in tm.triples() {
                let (i, j, k) = (i - 1, j - 1, k - 1);
                jac[(row, i)] += x[j] * x[k];
                jac[(row, j)] += x[i] * x[k];
                jac[(row, k)] += x[i] * x[j];
                row += 1;
            }
        }
        Ok(jac)
    }
}

fn distinct_permutations(t: [usize; 3]) -> Vec<[usize; 3]> {
    let [a, b, c] = t;
    let mut perms = vec![
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ];
    perms.sort_unstable();
    perms.dedup();
    perms
}
