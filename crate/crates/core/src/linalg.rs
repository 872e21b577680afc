//! Sparse symmetric assembly and a prefactorized Cholesky solve for `|V| × 3`
//! right-hand sides.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::Vec3;

/// Triplet-form square matrix; duplicate entries are summed on use.
#[derive(Clone, Debug, Default)]
pub struct SparseBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.entries.push((i, j, v));
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Compressed row form with duplicates summed: for each row, sorted `(col, value)`.
    pub fn to_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for &(i, j, v) in &self.entries {
            rows[i].push((j, v));
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(j, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => merged.push((j, v)),
                }
            }
            *row = merged;
        }
        rows
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self
            .entries
            .iter()
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// `LLᵀ` factorization of a symmetric positive definite sparse matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    llt: Llt<usize, f64>,
}

impl Cholesky {
    pub fn factorize(matrix: &SparseBuilder) -> Result<Self> {
        let a = matrix.to_faer()?;
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { n: matrix.n, llt })
    }

    /// Reuses a symbolic analysis for a matrix with the same sparsity pattern.
    pub fn refactorize(symbolic: &SymbolicCholesky, matrix: &SparseBuilder) -> Result<Self> {
        let a = matrix.to_faer()?;
        let llt = Llt::try_new_with_symbolic(symbolic.0.clone(), a.as_ref(), Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { n: matrix.n, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves for three right-hand-side columns packed as rows of 3-vectors.
    pub fn solve(&self, rhs: &[Vec3]) -> Result<Vec<Vec3>> {
        if rhs.len() != self.n {
            return Err(Error::Solve(format!(
                "right-hand side has {} rows, matrix has {}",
                rhs.len(),
                self.n
            )));
        }
        let mut b = Mat::<f64>::from_fn(self.n, 3, |i, j| rhs[i][j]);
        self.llt.solve_in_place(b.as_mut());
        let out: Vec<Vec3> = (0..self.n)
            .map(|i| Vec3::new(b[(i, 0)], b[(i, 1)], b[(i, 2)]))
            .collect();
        if out.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Solve("back-substitution produced non-finite values".into()));
        }
        Ok(out)
    }
}

/// Fill-reducing symbolic analysis shared across refactorizations.
#[derive(Clone, Debug)]
pub struct SymbolicCholesky(SymbolicLlt<usize>);

impl SymbolicCholesky {
    pub fn analyze(matrix: &SparseBuilder) -> Result<Self> {
        let a = matrix.to_faer()?;
        SymbolicLlt::try_new(a.symbolic(), Side::Lower)
            .map(Self)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        let n = 50;
        let mut a = SparseBuilder::new(n);
        for i in 0..n {
            a.add(i, i, 2.0);
            a.add(i, i, 1.0);
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
                a.add(i + 1, i, -1.0);
            }
        }
        let x: Vec<Vec3> = (0..n)
            .map(|i| Vec3::new(i as f64, (i * i) as f64 * 0.01, 1.0))
            .collect();
        let dense = a.to_dense();
        let rhs: Vec<Vec3> = (0..n)
            .map(|i| (0..n).map(|j| x[j] * dense[(i, j)]).sum())
            .collect();
        let sol = Cholesky::factorize(&a).unwrap().solve(&rhs).unwrap();
        for (s, e) in sol.iter().zip(&x) {
            assert!((s - e).norm() < 1e-9);
        }
        let sym = SymbolicCholesky::analyze(&a).unwrap();
        let again = Cholesky::refactorize(&sym, &a).unwrap().solve(&rhs).unwrap();
        assert!((again[7] - x[7]).norm() < 1e-9);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let mut a = SparseBuilder::new(2);
        a.add(0, 0, 1.0);
        a.add(1, 1, -1.0);
        assert!(matches!(Cholesky::factorize(&a), Err(Error::Factorization(_))));
    }
}
